use std::cmp::Ordering;
use std::fmt;

/// Largest exponent magnitude accepted in scientific notation. Anything
/// beyond this is treated as text rather than expanded digit by digit.
const MAX_EXPONENT: i64 = 4096;

/// Exact decimal number kept in canonical digit form.
///
/// The integer part carries no leading zeros and the fraction no trailing
/// zeros, so structural equality is numeric equality and ties are exact.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decimal {
    negative: bool,
    int: Box<str>,
    frac: Box<str>,
}

impl Decimal {
    /// Parses `[+-]digits[.digits][e[+-]digits]`. Returns `None` for anything
    /// else, including `inf`, `NaN` and thousands separators.
    pub fn parse(raw: &str) -> Option<Self> {
        let s = raw.trim();
        let (negative, rest) = match s.as_bytes().first()? {
            b'-' => (true, &s[1..]),
            b'+' => (false, &s[1..]),
            _ => (false, s),
        };
        let (mantissa, exponent) = match rest.find(['e', 'E']) {
            Some(pos) => {
                let exp_str = &rest[pos + 1..];
                let digits = exp_str.strip_prefix(['+', '-']).unwrap_or(exp_str);
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return None;
                }
                let exp: i64 = exp_str.parse().ok()?;
                if exp.abs() > MAX_EXPONENT {
                    return None;
                }
                (&rest[..pos], exp)
            }
            None => (rest, 0),
        };
        let (int_digits, frac_digits) = match mantissa.split_once('.') {
            Some((i, f)) => (i, f),
            None => (mantissa, ""),
        };
        if int_digits.is_empty() && frac_digits.is_empty() {
            return None;
        }
        if !int_digits.bytes().all(|b| b.is_ascii_digit())
            || !frac_digits.bytes().all(|b| b.is_ascii_digit())
        {
            return None;
        }

        let mut digits = String::with_capacity(int_digits.len() + frac_digits.len());
        digits.push_str(int_digits);
        digits.push_str(frac_digits);
        let point = int_digits.len() as i64 + exponent;

        let (int, frac) = if point <= 0 {
            let mut frac = "0".repeat((-point) as usize);
            frac.push_str(&digits);
            (String::new(), frac)
        } else if point as usize >= digits.len() {
            let mut int = digits.clone();
            int.push_str(&"0".repeat(point as usize - digits.len()));
            (int, String::new())
        } else {
            let (i, f) = digits.split_at(point as usize);
            (i.to_string(), f.to_string())
        };
        let int = int.trim_start_matches('0');
        let frac = frac.trim_end_matches('0');
        let zero = int.is_empty() && frac.is_empty();
        Some(Decimal {
            negative: negative && !zero,
            int: int.into(),
            frac: frac.into(),
        })
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    fn cmp_magnitude(&self, other: &Self) -> Ordering {
        self.int
            .len()
            .cmp(&other.int.len())
            .then_with(|| self.int.cmp(&other.int))
            .then_with(|| self.frac.cmp(&other.frac))
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.negative, other.negative) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            (false, false) => self.cmp_magnitude(other),
            (true, true) => other.cmp_magnitude(self),
        }
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            f.write_str("-")?;
        }
        if self.int.is_empty() {
            f.write_str("0")?;
        } else {
            f.write_str(&self.int)?;
        }
        if !self.frac.is_empty() {
            write!(f, ".{}", self.frac)?;
        }
        Ok(())
    }
}

/// Kind shared by every non-null cell of a column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Number,
    Text,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnKind::Number => f.write_str("number"),
            ColumnKind::Text => f.write_str("text"),
        }
    }
}

/// A single cell. `Null` is the missing value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Null,
    Number(Decimal),
    Text(String),
}

impl Value {
    pub fn number(raw: &str) -> Option<Self> {
        Decimal::parse(raw).map(Value::Number)
    }

    pub fn text(raw: impl Into<String>) -> Self {
        Value::Text(raw.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn kind(&self) -> Option<ColumnKind> {
        match self {
            Value::Null => None,
            Value::Number(_) => Some(ColumnKind::Number),
            Value::Text(_) => Some(ColumnKind::Text),
        }
    }
}

/// Only values of the same kind are comparable; `Null` compares with nothing.
impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Value::Number(a), Value::Number(b)) => Some(a.cmp(b)),
            (Value::Text(a), Value::Text(b)) => Some(a.as_bytes().cmp(b.as_bytes())),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("⊥"),
            Value::Number(d) => d.fmt(f),
            Value::Text(s) => f.write_str(s),
        }
    }
}

/// Decides the kind of each column from its non-null cells: `Number` iff
/// every cell parses as a decimal, otherwise `Text`. An all-null column is
/// `Text`.
pub fn infer_column_kinds<S: AsRef<str>>(columns: &[Vec<S>]) -> Vec<ColumnKind> {
    columns.iter().map(|c| infer_column_kind(c)).collect()
}

pub fn infer_column_kind<S: AsRef<str>>(cells: &[S]) -> ColumnKind {
    if !cells.is_empty() && cells.iter().all(|c| Decimal::parse(c.as_ref()).is_some()) {
        ColumnKind::Number
    } else {
        ColumnKind::Text
    }
}
