use std::fmt;
use std::str::FromStr;

/// Inclusive integer range written `lo..hi`, `lo..=hi` or a single `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntRange {
    pub lo: u64,
    pub hi: u64,
}

impl IntRange {
    pub fn iter(self) -> impl Iterator<Item = u64> + Clone {
        self.lo..=self.hi
    }

    pub fn usizes(self) -> impl Iterator<Item = usize> + Clone {
        self.iter().map(|x| x as usize)
    }
}

impl FromStr for IntRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let number = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("invalid integer {t:?} in {s:?}"));
        let (lo, hi) = match s.split_once("..") {
            Some((lo, hi)) => (number(lo)?, number(hi.strip_prefix('=').unwrap_or(hi))?),
            None => {
                let k = number(s)?;
                (k, k)
            }
        };
        if lo > hi {
            return Err(format!("empty range {s:?}"));
        }
        Ok(Self { lo, hi })
    }
}

impl fmt::Display for IntRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!("1..20".parse(), Ok(IntRange { lo: 1, hi: 20 }));
        assert_eq!("2..=4".parse(), Ok(IntRange { lo: 2, hi: 4 }));
        assert_eq!("7".parse(), Ok(IntRange { lo: 7, hi: 7 }));
        assert_eq!("1..20".parse::<IntRange>().unwrap().iter().count(), 20);
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!("5..2".parse::<IntRange>().is_err());
        assert!("a..3".parse::<IntRange>().is_err());
        assert!("".parse::<IntRange>().is_err());
        assert!("-1".parse::<IntRange>().is_err());
    }
}
