//! Random classmarks drawn from the grammar, for round-trip and property
//! tests. Every generated string should be accepted by the oracle; the tests
//! check that too, so a generator bug cannot hide a parser bug.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Generator {
    rng: ChaCha8Rng,
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// A normalized classmark.
    pub fn classmark(&mut self) -> String {
        let depth = *[0, 0, 0, 1, 1, 2].choose(&mut self.rng).unwrap();
        self.expr(depth)
    }

    /// Inserts random whitespace outside time quotes, returning the raw text
    /// whose normalization is `normalized`.
    pub fn with_noise(&mut self, normalized: &str) -> String {
        let mut out = String::new();
        let mut in_quote = false;
        for c in normalized.chars() {
            if !in_quote && self.rng.gen_bool(0.15) {
                out.push(*[' ', '\t', ' '].choose(&mut self.rng).unwrap());
            }
            if c == '"' {
                in_quote = !in_quote;
            }
            out.push(c);
        }
        if self.rng.gen_bool(0.2) {
            out.push(' ');
        }
        out
    }

    fn nonzero(&mut self) -> char {
        char::from(b'1' + self.rng.gen_range(0..9u8))
    }

    fn digits(&mut self, n: usize) -> String {
        (0..n).map(|_| char::from(b'0' + self.rng.gen_range(0..10u8))).collect()
    }

    /// Dot-grouped digit run; returns the text and its final group length.
    fn run(&mut self, first: Option<char>) -> (String, usize) {
        let groups = *[1, 1, 1, 2, 2, 3].choose(&mut self.rng).unwrap();
        let mut s = String::new();
        let mut last = 0;
        for g in 0..groups {
            let len = if g + 1 == groups { self.rng.gen_range(1..=3) } else { 3 };
            if g > 0 {
                s.push('.');
            }
            let mut d = self.digits(len);
            if g == 0 {
                if let Some(c) = first {
                    d.replace_range(0..1, &c.to_string());
                }
            }
            s.push_str(&d);
            last = len;
        }
        (s, last)
    }

    fn main(&mut self) -> String {
        let first = char::from(b'0' + self.rng.gen_range(0..10u8));
        let (mut s, mut last) = self.run(Some(first));
        let mut plain = true;
        if self.rng.gen_bool(0.08) {
            s.push(char::from(b'A' + self.rng.gen_range(0..26u8)));
            for _ in 0..self.rng.gen_range(0..4) {
                s.push(char::from(b'a' + self.rng.gen_range(0..26u8)));
            }
            plain = false;
        }
        if self.rng.gen_bool(0.05) {
            s.push('*');
            let n = self.rng.gen_range(1..4);
            s.push_str(&self.digits(n));
            plain = false;
        }
        for _ in 0..self.rng.gen_range(0..3usize).saturating_sub(1) {
            match self.rng.gen_range(0..3) {
                0 => {
                    let d = self.nonzero();
                    let (r, l) = self.run(Some(d));
                    s.push('-');
                    s.push_str(&r);
                    last = l;
                }
                1 => {
                    let (r, l) = self.run(None);
                    s.push('\'');
                    s.push_str(&r);
                    last = l;
                }
                _ if plain && last < 3 => {
                    let extra = self.rng.gen_range(1..=2);
                    s.push_str(".0");
                    s.push_str(&self.digits(extra));
                    last = extra + 1;
                }
                _ => {}
            }
            plain = true;
        }
        s
    }

    fn time(&mut self) -> String {
        let group = |g: &mut Self| {
            let parts = g.rng.gen_range(1..=3);
            (0..parts)
                .map(|_| {
                    let n = g.rng.gen_range(1..=4);
                    g.digits(n)
                })
                .collect::<Vec<_>>()
                .join(".")
        };
        let mut body = group(self);
        if self.rng.gen_bool(0.3) {
            body.push('/');
            body.push_str(&group(self));
        }
        format!("\"{body}\"")
    }

    fn common(&mut self) -> String {
        match self.rng.gen_range(0..6) {
            0 => format!("={}", self.run(None).0),
            1 => format!("(={})", self.run(None).0),
            2 => format!("({})", self.run(Some('0')).0),
            3 => {
                let d = self.nonzero();
                format!("({})", self.run(Some(d)).0)
            }
            4 => self.time(),
            _ => {
                // `-0` followed by at least one more digit
                let (mut r, _) = self.run(Some('0'));
                if r.len() == 1 {
                    r.push_str(&self.digits(1));
                }
                format!("-{r}")
            }
        }
    }

    fn base(&mut self, depth: u32) -> String {
        let roll = self.rng.gen_range(0..100);
        if roll < 15 && depth > 0 {
            format!("[{}]", self.expr(depth - 1))
        } else if roll < 30 {
            self.common()
        } else {
            self.main()
        }
    }

    fn unit(&mut self, depth: u32) -> String {
        let mut s = self.base(depth);
        let n = *[0, 0, 0, 0, 1, 2].choose(&mut self.rng).unwrap();
        for _ in 0..n {
            s.push_str(&self.common());
        }
        s
    }

    fn join(&mut self, n: usize, seps: &[&str], mut item: impl FnMut(&mut Self) -> String) -> String {
        let mut s = item(self);
        for _ in 1..n {
            s.push_str(seps.choose(&mut self.rng).unwrap());
            s.push_str(&item(self));
        }
        s
    }

    fn expr(&mut self, depth: u32) -> String {
        let members = *[1, 1, 1, 1, 2, 3].choose(&mut self.rng).unwrap();
        self.join(members, &["+"], |g| {
            let rels = *[1, 1, 1, 2, 3].choose(&mut g.rng).unwrap();
            g.join(rels, &[":", ":", "::"], |g| {
                let ranges = *[1, 1, 1, 2].choose(&mut g.rng).unwrap();
                g.join(ranges, &["/"], |g| g.unit(depth))
            })
        })
    }
}

/// `n` distinct-seeded generated classmarks.
pub fn generated(seed: u64, n: usize) -> Vec<String> {
    let mut g = Generator::new(seed);
    (0..n).map(|_| g.classmark()).collect()
}
