//! Flat key=value config files: one pair per line, `#` comments, later
//! duplicates override earlier ones. List values use commas, ranges use
//! `lo..hi` (inclusive on both ends).

use crate::error::{CliError, Result};

pub fn parse_flat(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Format(format!("line {}: expected key=value", idx + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    parse_list(text)
}

pub fn parse_u64_list(text: &str) -> Result<Vec<u64>> {
    parse_list(text)
}

fn parse_list<T>(text: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr + RangeStep + Copy,
{
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: T = parse_one(lo)?;
            let hi: T = parse_one(hi)?;
            let mut v = lo;
            loop {
                out.push(v);
                if !v.below(hi) {
                    break;
                }
                v = v.next();
            }
        } else {
            out.push(parse_one(part)?);
        }
    }
    Ok(out)
}

fn parse_one<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Format(format!("bad number: {s:?}")))
}

trait RangeStep {
    fn below(self, hi: Self) -> bool;
    fn next(self) -> Self;
}

impl RangeStep for usize {
    fn below(self, hi: usize) -> bool {
        self < hi
    }
    fn next(self) -> usize {
        self + 1
    }
}

impl RangeStep for u64 {
    fn below(self, hi: u64) -> bool {
        self < hi
    }
    fn next(self) -> u64 {
        self + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_parse_with_comments_and_blanks() {
        let text = "# sweep setup\nmethod = os2-fast\n\nn=16,32\nphi = 0.5\n";
        let pairs = parse_flat(text).unwrap();
        assert_eq!(
            pairs,
            vec![
                ("method".to_string(), "os2-fast".to_string()),
                ("n".to_string(), "16,32".to_string()),
                ("phi".to_string(), "0.5".to_string()),
            ]
        );
    }

    #[test]
    fn values_may_contain_equals_signs() {
        let pairs = parse_flat("note=a=b").unwrap();
        assert_eq!(pairs[0], ("note".to_string(), "a=b".to_string()));
    }

    #[test]
    fn bare_words_are_rejected() {
        assert!(parse_flat("method\n").is_err());
    }

    #[test]
    fn lists_mix_ranges_and_single_values() {
        assert_eq!(parse_usize_list("2..5,8,10").unwrap(), vec![2, 3, 4, 5, 8, 10]);
        assert_eq!(parse_usize_list("7").unwrap(), vec![7]);
        assert_eq!(parse_usize_list("").unwrap(), Vec::<usize>::new());
        assert!(parse_usize_list("2..x").is_err());
        // a backwards range holds just the start
        assert_eq!(parse_usize_list("5..3").unwrap(), vec![5]);
    }
}
