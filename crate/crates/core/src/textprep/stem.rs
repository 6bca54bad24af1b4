//! English (Porter2) stemmer, in the original Snowball formulation.
//!
//! Input is expected to be a lowercase ASCII token; anything else is returned
//! unchanged.

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u' | b'y')
}

fn is_double(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2
        && w[n - 1] == w[n - 2]
        && matches!(w[n - 1], b'b' | b'd' | b'f' | b'g' | b'm' | b'n' | b'p' | b'r' | b't')
}

fn is_li_ending(c: u8) -> bool {
    matches!(c, b'c' | b'd' | b'e' | b'g' | b'h' | b'k' | b'm' | b'n' | b'r' | b't')
}

/// Whether `w` ends in a short syllable.
fn ends_short_syllable(w: &[u8]) -> bool {
    let n = w.len();
    if n == 2 {
        return is_vowel(w[0]) && !is_vowel(w[1]);
    }
    n >= 3
        && !is_vowel(w[n - 3])
        && is_vowel(w[n - 2])
        && !is_vowel(w[n - 1])
        && !matches!(w[n - 1], b'w' | b'x' | b'Y')
}

/// Start of the region after the first non-vowel that follows a vowel,
/// searching from `from`.
fn region_after(w: &[u8], from: usize) -> usize {
    let mut i = from;
    while i + 1 < w.len() {
        if is_vowel(w[i]) && !is_vowel(w[i + 1]) {
            return i + 2;
        }
        i += 1;
    }
    w.len()
}

struct Word {
    w: Vec<u8>,
    r1: usize,
    r2: usize,
}

impl Word {
    fn ends_with(&self, suffix: &str) -> bool {
        self.w.ends_with(suffix.as_bytes())
    }

    fn suffix_start(&self, suffix: &str) -> usize {
        self.w.len() - suffix.len()
    }

    fn in_r1(&self, suffix: &str) -> bool {
        self.suffix_start(suffix) >= self.r1
    }

    fn in_r2(&self, suffix: &str) -> bool {
        self.suffix_start(suffix) >= self.r2
    }

    fn replace(&mut self, suffix: &str, with: &str) {
        let start = self.suffix_start(suffix);
        self.w.truncate(start);
        self.w.extend_from_slice(with.as_bytes());
    }

    /// Longest entry of `suffixes` the word ends with.
    fn longest<'a>(&self, suffixes: &[&'a str]) -> Option<&'a str> {
        suffixes
            .iter()
            .copied()
            .filter(|s| self.ends_with(s))
            .max_by_key(|s| s.len())
    }

    fn is_short(&self) -> bool {
        self.r1 >= self.w.len() && ends_short_syllable(&self.w)
    }
}

const EXCEPTIONS: [(&str, &str); 18] = [
    ("skis", "ski"),
    ("skies", "sky"),
    ("dying", "die"),
    ("lying", "lie"),
    ("tying", "tie"),
    ("idly", "idl"),
    ("gently", "gentl"),
    ("ugly", "ugli"),
    ("early", "earli"),
    ("only", "onli"),
    ("singly", "singl"),
    ("sky", "sky"),
    ("news", "news"),
    ("howe", "howe"),
    ("atlas", "atlas"),
    ("cosmos", "cosmos"),
    ("bias", "bias"),
    ("andes", "andes"),
];

const POST_1A_INVARIANT: [&str; 8] =
    ["inning", "outing", "canning", "herring", "earring", "proceed", "exceed", "succeed"];

pub fn stem(token: &str) -> String {
    if token.len() <= 2 || !token.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()) {
        return token.to_string();
    }
    if let Some((_, out)) = EXCEPTIONS.iter().find(|(w, _)| *w == token) {
        return (*out).to_string();
    }

    let mut w: Vec<u8> = token.as_bytes().to_vec();
    if w[0] == b'y' {
        w[0] = b'Y';
    }
    for i in 1..w.len() {
        if w[i] == b'y' && is_vowel(w[i - 1]) {
            w[i] = b'Y';
        }
    }
    let r1 = ["gener", "commun", "arsen"]
        .iter()
        .find(|p| w.starts_with(p.as_bytes()))
        .map_or_else(|| region_after(&w, 0), |p| p.len());
    let r2 = region_after(&w, r1);
    let mut word = Word { w, r1, r2 };

    step1a(&mut word);
    if POST_1A_INVARIANT.iter().any(|x| x.as_bytes() == word.w.as_slice()) {
        return String::from_utf8(word.w).unwrap();
    }
    step1b(&mut word);
    step1c(&mut word);
    step2(&mut word);
    step3(&mut word);
    step4(&mut word);
    step5(&mut word);

    for c in word.w.iter_mut() {
        if *c == b'Y' {
            *c = b'y';
        }
    }
    String::from_utf8(word.w).unwrap()
}

fn step1a(word: &mut Word) {
    match word.longest(&["sses", "ied", "ies", "ss", "us", "s"]) {
        Some("sses") => word.replace("sses", "ss"),
        Some(s @ ("ied" | "ies")) => {
            let with = if word.w.len() > 4 { "i" } else { "ie" };
            word.replace(s, with);
        }
        Some("s") => {
            let n = word.w.len();
            if word.w[..n - 2].iter().any(|&c| is_vowel(c)) {
                word.w.pop();
            }
        }
        _ => {}
    }
}

fn step1b(word: &mut Word) {
    match word.longest(&["eedly", "ingly", "edly", "eed", "ing", "ed"]) {
        Some(s @ ("eed" | "eedly")) => {
            if word.in_r1(s) {
                word.replace(s, "ee");
            }
        }
        Some(s) => {
            let start = word.suffix_start(s);
            if !word.w[..start].iter().any(|&c| is_vowel(c)) {
                return;
            }
            word.w.truncate(start);
            if word.ends_with("at") || word.ends_with("bl") || word.ends_with("iz") {
                word.w.push(b'e');
            } else if is_double(&word.w) {
                word.w.pop();
            } else if word.is_short() {
                word.w.push(b'e');
            }
        }
        None => {}
    }
}

fn step1c(word: &mut Word) {
    let n = word.w.len();
    if n > 2 && matches!(word.w[n - 1], b'y' | b'Y') && !is_vowel(word.w[n - 2]) {
        word.w[n - 1] = b'i';
    }
}

const STEP2: [(&str, &str); 24] = [
    ("tional", "tion"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("abli", "able"),
    ("entli", "ent"),
    ("izer", "ize"),
    ("ization", "ize"),
    ("ational", "ate"),
    ("ation", "ate"),
    ("ator", "ate"),
    ("alism", "al"),
    ("aliti", "al"),
    ("alli", "al"),
    ("fulness", "ful"),
    ("ousli", "ous"),
    ("ousness", "ous"),
    ("iveness", "ive"),
    ("iviti", "ive"),
    ("biliti", "ble"),
    ("bli", "ble"),
    ("ogi", "og"),
    ("fulli", "ful"),
    ("lessli", "less"),
    ("li", ""),
];

fn step2(word: &mut Word) {
    let keys: Vec<&str> = STEP2.iter().map(|p| p.0).collect();
    let Some(s) = word.longest(&keys) else { return };
    if !word.in_r1(s) {
        return;
    }
    let start = word.suffix_start(s);
    match s {
        "ogi" if start == 0 || word.w[start - 1] != b'l' => {}
        "li" if start == 0 || !is_li_ending(word.w[start - 1]) => {}
        _ => {
            let with = STEP2.iter().find(|p| p.0 == s).unwrap().1;
            word.replace(s, with);
        }
    }
}

const STEP3: [(&str, &str); 9] = [
    ("tional", "tion"),
    ("ational", "ate"),
    ("alize", "al"),
    ("icate", "ic"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ful", ""),
    ("ness", ""),
    ("ative", ""),
];

fn step3(word: &mut Word) {
    let keys: Vec<&str> = STEP3.iter().map(|p| p.0).collect();
    let Some(s) = word.longest(&keys) else { return };
    if !word.in_r1(s) || (s == "ative" && !word.in_r2(s)) {
        return;
    }
    let with = STEP3.iter().find(|p| p.0 == s).unwrap().1;
    word.replace(s, with);
}

const STEP4: [&str; 18] = [
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ism", "ate",
    "iti", "ous", "ive", "ize", "ion",
];

fn step4(word: &mut Word) {
    let Some(s) = word.longest(&STEP4) else { return };
    if !word.in_r2(s) {
        return;
    }
    if s == "ion" {
        let start = word.suffix_start(s);
        if start == 0 || !matches!(word.w[start - 1], b's' | b't') {
            return;
        }
    }
    word.replace(s, "");
}

fn step5(word: &mut Word) {
    if word.ends_with("e") {
        let stem = &word.w[..word.w.len() - 1];
        if word.in_r2("e") || (word.in_r1("e") && !ends_short_syllable(stem)) {
            word.w.pop();
        }
    } else if word.ends_with("l") && word.in_r2("l") && word.w.len() >= 2 && word.w[word.w.len() - 2] == b'l' {
        word.w.pop();
    }
}
