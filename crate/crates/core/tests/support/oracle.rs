//! Naive exhaustive recognizer for the classmark grammar.
//!
//! Every rule is a predicate over a substring `[i, j)` and tries every split
//! point. Nothing here shares code with the library parser; results are
//! memoized only so that longer generated strings stay tractable.

use std::collections::HashMap;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Rule {
    Coord,
    Relation,
    Range,
    Unit,
    Base,
    Group,
    Common,
    Main,
}

pub struct Recognizer {
    s: Vec<char>,
    memo: HashMap<(Rule, usize, usize), bool>,
}

/// Accepts exactly the strings derivable from the grammar. Whitespace is not
/// part of the alphabet; callers pass normalized text.
pub fn accepts(input: &str) -> bool {
    let mut r = Recognizer {
        s: input.chars().collect(),
        memo: HashMap::new(),
    };
    let n = r.s.len();
    n > 0 && r.rule(Rule::Coord, 0, n)
}

impl Recognizer {
    fn at(&self, i: usize) -> Option<char> {
        self.s.get(i).copied()
    }

    fn rule(&mut self, rule: Rule, i: usize, j: usize) -> bool {
        if i >= j {
            return false;
        }
        if let Some(&hit) = self.memo.get(&(rule, i, j)) {
            return hit;
        }
        let out = match rule {
            Rule::Coord => {
                self.rule(Rule::Relation, i, j)
                    || (i + 1..j).any(|k| {
                        self.s[k] == '+' && self.rule(Rule::Coord, i, k) && self.rule(Rule::Relation, k + 1, j)
                    })
            }
            Rule::Relation => {
                self.rule(Rule::Range, i, j)
                    || (i + 1..j).any(|k| {
                        if self.s[k] != ':' {
                            return false;
                        }
                        let single = self.rule(Rule::Relation, i, k) && self.rule(Rule::Range, k + 1, j);
                        let double = self.at(k + 1) == Some(':')
                            && self.rule(Rule::Relation, i, k)
                            && self.rule(Rule::Range, k + 2, j);
                        single || double
                    })
            }
            Rule::Range => {
                self.rule(Rule::Unit, i, j)
                    || (i + 1..j)
                        .any(|k| self.s[k] == '/' && self.rule(Rule::Range, i, k) && self.rule(Rule::Unit, k + 1, j))
            }
            Rule::Unit => {
                self.rule(Rule::Base, i, j)
                    || (i + 1..j).any(|k| self.rule(Rule::Unit, i, k) && self.rule(Rule::Common, k, j))
            }
            Rule::Base => self.rule(Rule::Main, i, j) || self.rule(Rule::Group, i, j) || self.rule(Rule::Common, i, j),
            Rule::Group => {
                j - i >= 3 && self.s[i] == '[' && self.s[j - 1] == ']' && self.rule(Rule::Coord, i + 1, j - 1)
            }
            Rule::Common => self.common(i, j),
            Rule::Main => self.main(i, j),
        };
        self.memo.insert((rule, i, j), out);
        out
    }

    fn common(&self, i: usize, j: usize) -> bool {
        let first = self.s[i];
        let last = self.s[j - 1];
        match first {
            '=' => self.run(i + 1, j).is_some(),
            '(' => {
                if last != ')' || j - i < 3 {
                    return false;
                }
                // ethnic `(=...)`, form `(0...)`, place `(1-9...)`
                self.run(i + 1, j - 1).is_some() || (self.s[i + 1] == '=' && self.run(i + 2, j - 1).is_some())
            }
            '"' => j - i >= 3 && last == '"' && self.time_body(i + 1, j - 1),
            '-' => j - i >= 3 && self.s[i + 1] == '0' && self.run(i + 1, j).is_some(),
            _ => false,
        }
    }

    /// Digit groups of exactly three separated by dots; the final group has
    /// one to three digits. Returns the length of the final group.
    fn run(&self, i: usize, j: usize) -> Option<usize> {
        if i >= j || j > self.s.len() {
            return None;
        }
        let text: String = self.s[i..j].iter().collect();
        let groups: Vec<&str> = text.split('.').collect();
        let (last, init) = groups.split_last()?;
        let digits_only = |g: &str| !g.is_empty() && g.chars().all(|c| c.is_ascii_digit());
        if !groups.iter().all(|g| digits_only(g)) {
            return None;
        }
        if init.iter().any(|g| g.len() != 3) || last.len() > 3 {
            return None;
        }
        Some(last.len())
    }

    fn time_group(&self, i: usize, j: usize) -> bool {
        if i >= j {
            return false;
        }
        let text: String = self.s[i..j].iter().collect();
        text.split('.')
            .all(|g| !g.is_empty() && g.chars().all(|c| c.is_ascii_digit()))
    }

    fn time_body(&self, i: usize, j: usize) -> bool {
        self.time_group(i, j)
            || (i + 1..j).any(|k| self.s[k] == '/' && self.time_group(i, k) && self.time_group(k + 1, j))
    }

    fn is_ext(&self, i: usize, j: usize) -> bool {
        j > i && self.s[i].is_ascii_uppercase() && self.s[i + 1..j].iter().all(|c| c.is_ascii_alphabetic())
    }

    fn is_suffix(&self, i: usize, j: usize) -> bool {
        j > i + 1 && self.s[i] == '*' && self.s[i + 1..j].iter().all(|c| c.is_ascii_alphanumeric() || *c == '.')
    }

    fn main(&self, i: usize, j: usize) -> bool {
        for a in i + 1..=j {
            let Some(lg) = self.run(i, a) else { continue };
            for b in a..=j {
                if b > a && !self.is_ext(a, b) {
                    continue;
                }
                for c in b..=j {
                    if c > b && !self.is_suffix(b, c) {
                        continue;
                    }
                    let prev = if c == a { Some(lg) } else { None };
                    if self.specials(c, j, prev) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Zero or more special auxiliaries covering `[i, j)`. `prev` is the final
    /// group length of an immediately preceding digit run, if any.
    fn specials(&self, i: usize, j: usize, prev: Option<usize>) -> bool {
        if i == j {
            return true;
        }
        for k in i + 2..=j {
            let next = match self.s[i] {
                '-' if matches!(self.s[i + 1], '1'..='9') => self.run(i + 1, k),
                '\'' => self.run(i + 1, k),
                '.' if prev.is_some_and(|g| g < 3) && self.s[i + 1] == '0' && k - i >= 3 => self.run(i + 1, k),
                _ => None,
            };
            if let Some(lg) = next {
                if self.specials(k, j, Some(lg)) {
                    return true;
                }
            }
        }
        false
    }
}
