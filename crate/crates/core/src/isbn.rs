//! ISBN normalization and validation.
//!
//! Every valid ISBN is canonicalized to its 13-digit form so that the
//! 10- and 13-digit spellings of the same book join to the same record.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsbnError {
    #[error("ISBN `{0}` has {1} characters after normalization, expected 10 or 13")]
    Length(String, usize),
    #[error("ISBN `{0}` contains a character that is not a digit")]
    NonDigit(String),
    #[error("ISBN `{0}` fails its checksum")]
    Checksum(String),
}

/// A checksum-valid ISBN in canonical ISBN-13 form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Isbn(String);

/// Strips hyphens and whitespace and uppercases a trailing `x`.
pub fn normalize(raw: &str) -> String {
    raw.chars()
        .filter(|c| *c != '-' && !c.is_whitespace())
        .map(|c| c.to_ascii_uppercase())
        .collect()
}

fn digit(c: char) -> Option<u32> {
    c.to_digit(10)
}

fn isbn10_valid(s: &str) -> Result<bool, IsbnError> {
    let mut sum = 0;
    for (i, c) in s.chars().enumerate() {
        let value = match (i, c) {
            (9, 'X') => 10,
            _ => digit(c).ok_or_else(|| IsbnError::NonDigit(s.to_string()))?,
        };
        sum += (10 - i as u32) * value;
    }
    Ok(sum % 11 == 0)
}

fn isbn13_check_digit(first12: &str) -> u32 {
    let sum: u32 = first12
        .chars()
        .filter_map(digit)
        .enumerate()
        .map(|(i, d)| if i % 2 == 0 { d } else { 3 * d })
        .sum();
    (10 - sum % 10) % 10
}

impl Isbn {
    pub fn parse(raw: &str) -> Result<Self, IsbnError> {
        let s = normalize(raw);
        match s.len() {
            10 => {
                if !isbn10_valid(&s)? {
                    return Err(IsbnError::Checksum(s));
                }
                let body = format!("978{}", &s[..9]);
                let check = isbn13_check_digit(&body);
                Ok(Isbn(format!("{body}{check}")))
            }
            13 => {
                if !s.chars().all(|c| c.is_ascii_digit()) {
                    return Err(IsbnError::NonDigit(s));
                }
                let check = isbn13_check_digit(&s[..12]);
                if digit(s.chars().last().unwrap_or('0')) != Some(check) {
                    return Err(IsbnError::Checksum(s));
                }
                Ok(Isbn(s))
            }
            n => Err(IsbnError::Length(s, n)),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Isbn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Isbn {
    type Error = IsbnError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Isbn::parse(&value)
    }
}

impl From<Isbn> for String {
    fn from(value: Isbn) -> Self {
        value.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_digit_converts_to_thirteen() {
        // 978 + 030640615, weighted sum 93, check digit 7.
        let isbn = Isbn::parse("0-306-40615-2").unwrap();
        assert_eq!(isbn.as_str(), "9780306406157");
        assert_eq!(Isbn::parse("978-0-306-40615-7").unwrap(), isbn);
    }

    #[test]
    fn lowercase_x_check_digit() {
        // weighted sum 0+72+0+28+24+10+36+15+14+10 = 209 = 11 * 19
        let isbn = Isbn::parse("080442957x").unwrap();
        // 978080442957: weighted sum 117, check digit 3
        assert_eq!(isbn.as_str(), "9780804429573");
    }

    #[test]
    fn rejects_bad_checksum_and_length() {
        assert!(matches!(Isbn::parse("0306406153"), Err(IsbnError::Checksum(_))));
        assert!(matches!(Isbn::parse("9780306406158"), Err(IsbnError::Checksum(_))));
        assert!(matches!(Isbn::parse("12345"), Err(IsbnError::Length(_, 5))));
        assert!(matches!(Isbn::parse("97803064061X7"), Err(IsbnError::NonDigit(_))));
        assert!(matches!(Isbn::parse("03064X6152"), Err(IsbnError::NonDigit(_))));
    }

    #[test]
    fn normalize_strips_separators() {
        assert_eq!(normalize(" 0 306-40615-x "), "030640615X");
    }
}
