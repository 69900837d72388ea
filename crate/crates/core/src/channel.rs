//! Discrete memoryless channel model: construction, spec-file parsing and
//! the singular / non-singular classification.

use crate::error::{Error, Result};

/// Probabilities below this are treated as exact zeros when parsing, so
/// that log-domain code downstream never sees denormal mass.
const MIN_POSITIVE_PROB: f64 = 1e-300;

/// Row/vector normalization tolerance.
const STOCHASTIC_TOL: f64 = 1e-12;

/// A discrete memoryless channel `W(y|x)` together with an input
/// distribution `Q(x)`. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    input_size: usize,
    output_size: usize,
    /// row-major: w[x * output_size + y]
    w: Vec<f64>,
    q: Vec<f64>,
}

impl ChannelModel {
    /// Builds and validates a channel from transition rows and an input law.
    pub fn new(rows: Vec<Vec<f64>>, q: Vec<f64>) -> Result<Self> {
        let input_size = rows.len();
        if input_size == 0 {
            return Err(Error::InvalidChannel("no transition rows".into()));
        }
        let output_size = rows[0].len();
        if output_size == 0 {
            return Err(Error::InvalidChannel("empty transition rows".into()));
        }
        if q.len() != input_size {
            return Err(Error::InvalidChannel(format!(
                "Q has {} entries but W has {} rows",
                q.len(),
                input_size
            )));
        }
        let mut w = Vec::with_capacity(input_size * output_size);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != output_size {
                return Err(Error::InvalidChannel(format!(
                    "row {x} has {} entries, expected {output_size}",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for (y, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                    return Err(Error::InvalidChannel(format!(
                        "W({y}|{x}) = {p} outside [0, 1]"
                    )));
                }
                let p = if p < MIN_POSITIVE_PROB { 0.0 } else { p };
                sum += p;
                w.push(p);
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidChannel(format!(
                    "row {x} not stochastic: sums to {sum:.17}"
                )));
            }
        }
        let mut qsum = 0.0;
        let mut q = q;
        for (x, p) in q.iter_mut().enumerate() {
            if !(0.0..=1.0).contains(p) || !p.is_finite() {
                return Err(Error::InvalidChannel(format!("Q({x}) = {p} outside [0, 1]")));
            }
            if *p < MIN_POSITIVE_PROB {
                *p = 0.0;
            }
            qsum += *p;
        }
        if (qsum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidChannel(format!("Q not a distribution: sums to {qsum:.17}")));
        }
        let model = ChannelModel { input_size, output_size, w, q };
        if !(0..input_size).any(|x| (0..output_size).any(|y| model.joint(x, y) > 0.0)) {
            return Err(Error::InvalidChannel("no (x, y) pair with Q(x) W(y|x) > 0".into()));
        }
        Ok(model)
    }

    /// Binary symmetric channel with crossover `delta` and uniform input law.
    pub fn bsc(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "BSC crossover must lie in (0, 0.5), got {delta}"
            )));
        }
        ChannelModel::new(
            vec![vec![1.0 - delta, delta], vec![delta, 1.0 - delta]],
            vec![0.5, 0.5],
        )
    }

    #[inline]
    pub fn input_size(&self) -> usize {
        self.input_size
    }

    #[inline]
    pub fn output_size(&self) -> usize {
        self.output_size
    }

    #[inline]
    pub fn w(&self, x: usize, y: usize) -> f64 {
        self.w[x * self.output_size + y]
    }

    #[inline]
    pub fn q(&self, x: usize) -> f64 {
        self.q[x]
    }

    /// Joint probability `Q(x) W(y|x)`.
    #[inline]
    pub fn joint(&self, x: usize, y: usize) -> f64 {
        self.q[x] * self.w(x, y)
    }

    /// Output marginal under Q.
    pub fn output_marginal(&self, y: usize) -> f64 {
        (0..self.input_size).map(|x| self.joint(x, y)).sum()
    }

    /// Recognizes a structural BSC (2x2, symmetric, uniform Q) and returns
    /// its crossover probability; the weight-enumeration oracles need it.
    pub fn as_bsc(&self) -> Option<f64> {
        if self.input_size != 2 || self.output_size != 2 {
            return None;
        }
        let delta = self.w(0, 1);
        let symmetric = (self.w(1, 0) - delta).abs() <= 1e-15
            && (self.w(0, 0) - (1.0 - delta)).abs() <= 1e-15
            && (self.w(1, 1) - (1.0 - delta)).abs() <= 1e-15;
        let uniform = (self.q(0) - 0.5).abs() <= 1e-15 && (self.q(1) - 0.5).abs() <= 1e-15;
        if symmetric && uniform && delta > 0.0 && delta < 0.5 {
            Some(delta)
        } else {
            None
        }
    }

    /// Parses the line-oriented channel spec format:
    ///
    /// ```text
    /// # comment
    /// X <input_size>
    /// Y <output_size>
    /// Q <q_1> ... <q_X>
    /// W <w_1,1> ... <w_1,Y>     (one W line per input, in order)
    /// ```
    pub fn parse_spec(text: &str) -> Result<Self> {
        let mut fields: Vec<(usize, Vec<&str>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            fields.push((idx + 1, line.split_whitespace().collect()));
        }
        let mut it = fields.into_iter();

        let (line, toks) = it.next().ok_or(Error::Parse { line: 1, message: "empty spec".into() })?;
        let input_size = parse_header(line, &toks, "X")?;
        let (line, toks) = it
            .next()
            .ok_or(Error::Parse { line, message: "missing Y line".into() })?;
        let output_size = parse_header(line, &toks, "Y")?;

        let (line, toks) = it
            .next()
            .ok_or(Error::Parse { line, message: "missing Q line".into() })?;
        if toks.first() != Some(&"Q") {
            return Err(Error::Parse { line, message: format!("expected Q line, got '{}'", toks.join(" ")) });
        }
        let q = parse_numbers(line, &toks[1..], input_size, "Q")?;

        let mut rows = Vec::with_capacity(input_size);
        let mut last_line = line;
        for x in 0..input_size {
            let (line, toks) = it.next().ok_or(Error::Parse {
                line: last_line,
                message: format!("missing W row {x}"),
            })?;
            last_line = line;
            if toks.first() != Some(&"W") {
                return Err(Error::Parse { line, message: format!("expected W row, got '{}'", toks.join(" ")) });
            }
            rows.push(parse_numbers(line, &toks[1..], output_size, "W")?);
        }
        if let Some((line, toks)) = it.next() {
            return Err(Error::Parse { line, message: format!("unexpected trailing line '{}'", toks.join(" ")) });
        }
        ChannelModel::new(rows, q)
    }

    /// Serializes to the spec format with 17 significant digits, so that
    /// `parse_spec(to_spec_string())` reproduces the channel bit-exactly.
    pub fn to_spec_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("X {}\n", self.input_size));
        out.push_str(&format!("Y {}\n", self.output_size));
        out.push('Q');
        for x in 0..self.input_size {
            out.push_str(&format!(" {:.16e}", self.q[x]));
        }
        out.push('\n');
        for x in 0..self.input_size {
            out.push('W');
            for y in 0..self.output_size {
                out.push_str(&format!(" {:.16e}", self.w(x, y)));
            }
            out.push('\n');
        }
        out
    }
}

fn parse_header(line: usize, toks: &[&str], tag: &str) -> Result<usize> {
    if toks.len() != 2 || toks[0] != tag {
        return Err(Error::Parse { line, message: format!("expected '{tag} <count>'") });
    }
    let n: usize = toks[1]
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("bad {tag} count '{}'", toks[1]) })?;
    if n == 0 {
        return Err(Error::Parse { line, message: format!("{tag} must be positive") });
    }
    Ok(n)
}

fn parse_numbers(line: usize, toks: &[&str], expected: usize, tag: &str) -> Result<Vec<f64>> {
    if toks.len() != expected {
        return Err(Error::Parse {
            line,
            message: format!("{tag} line has {} numbers, expected {expected}", toks.len()),
        });
    }
    toks.iter()
        .enumerate()
        .map(|(i, t)| {
            let v: f64 = t.parse().map_err(|_| Error::Parse {
                line,
                message: format!("{tag} field {}: '{t}' is not a decimal number", i + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("{tag} field {}: non-finite value", i + 1),
                });
            }
            Ok(v)
        })
        .collect()
}

/// The output symbols that distinguish at least two positive-probability
/// inputs. The pair (Q, W) is singular iff this set is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityReport {
    pub y1_set: Vec<usize>,
    pub is_singular: bool,
}

/// Classifies (Q, W): `y` belongs to the set when some inputs `x, xb` have
/// `Q(x) Q(xb) W(y|x) W(y|xb) > 0` and `W(y|x) != W(y|xb)` (exact
/// comparison: singularity is a structural property of the specified
/// channel, not a numerical one).
pub fn singularity_report(channel: &ChannelModel) -> SingularityReport {
    let mut y1_set = Vec::new();
    for y in 0..channel.output_size() {
        let mut found = false;
        'pairs: for x in 0..channel.input_size() {
            if channel.joint(x, y) <= 0.0 {
                continue;
            }
            for xb in 0..channel.input_size() {
                if channel.joint(xb, y) > 0.0 && channel.w(x, y) != channel.w(xb, y) {
                    found = true;
                    break 'pairs;
                }
            }
        }
        if found {
            y1_set.push(y);
        }
    }
    let is_singular = y1_set.is_empty();
    SingularityReport { y1_set, is_singular }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bsc_constructor() {
        let ch = ChannelModel::bsc(0.15).unwrap();
        assert_eq!(ch.w(0, 0), 0.85);
        assert_eq!(ch.w(0, 1), 0.15);
        assert_eq!(ch.w(1, 0), 0.15);
        assert_eq!(ch.w(1, 1), 0.85);
        assert_eq!(ch.q(0), 0.5);
        let ch = ChannelModel::bsc(0.25).unwrap();
        assert_eq!(ch.w(0, 0), 0.75);
        assert!(ChannelModel::bsc(0.5).is_err());
        assert!(ChannelModel::bsc(0.0).is_err());
        assert_eq!(ch.as_bsc(), Some(0.25));
    }

    #[test]
    fn parse_bsc_spec() {
        let text = "# BSC(0.15)\nX 2\nY 2\nQ 0.5 0.5\nW 0.85 0.15\nW 0.15 0.85\n";
        let ch = ChannelModel::parse_spec(text).unwrap();
        assert_eq!(ch, ChannelModel::bsc(0.15).unwrap());
    }

    #[test]
    fn parse_identity_channel() {
        let text = "X 3\nY 3\nQ 0.333333333333333333 0.333333333333333333 0.333333333333333334\nW 1 0 0\nW 0 1 0\nW 0 0 1\n";
        let ch = ChannelModel::parse_spec(text).unwrap();
        assert_eq!(ch.w(1, 1), 1.0);
        assert_eq!(ch.w(1, 2), 0.0);
    }

    #[test]
    fn parse_rejects_non_stochastic_row() {
        let text = "X 2\nY 2\nQ 0.5 0.5\nW 0.8 0.1\nW 0.15 0.85\n";
        let err = ChannelModel::parse_spec(text).unwrap_err();
        match err {
            Error::InvalidChannel(msg) => assert!(msg.contains("not stochastic"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_reports_line_numbers() {
        let text = "X 2\nY 2\nQ 0.5 junk\nW 0.85 0.15\nW 0.15 0.85\n";
        match ChannelModel::parse_spec(text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
        match ChannelModel::parse_spec("X 2\nY 2\nQ 0.5 0.5\nW 0.85 0.15\n").unwrap_err() {
            Error::Parse { message, .. } => assert!(message.contains("missing W row")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn spec_round_trip_is_bit_exact() {
        let ch = ChannelModel::new(
            vec![vec![0.7, 0.2, 0.1], vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]],
            vec![0.123456789012345, 0.876543210987655],
        )
        .unwrap();
        let round = ChannelModel::parse_spec(&ch.to_spec_string()).unwrap();
        assert_eq!(ch, round);
    }

    #[test]
    fn tiny_probabilities_become_exact_zeros() {
        let text = "X 2\nY 2\nQ 0.5 0.5\nW 1.0 1e-320\nW 0.15 0.85\n";
        let ch = ChannelModel::parse_spec(text).unwrap();
        assert_eq!(ch.w(0, 1), 0.0);
    }

    #[test]
    fn singularity_bsc_is_non_singular() {
        let ch = ChannelModel::bsc(0.15).unwrap();
        let rep = singularity_report(&ch);
        assert!(!rep.is_singular);
        assert_eq!(rep.y1_set, vec![0, 1]);
    }

    #[test]
    fn singularity_bec_is_singular() {
        // binary erasure channel: only the erasure symbol sees two inputs,
        // and both reach it with the same probability
        let ch = ChannelModel::new(
            vec![vec![0.7, 0.0, 0.3], vec![0.0, 0.7, 0.3]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let rep = singularity_report(&ch);
        assert!(rep.is_singular);
        assert!(rep.y1_set.is_empty());
    }

    #[test]
    fn singularity_identical_rows() {
        let ch = ChannelModel::new(
            vec![vec![0.6, 0.4], vec![0.6, 0.4]],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert!(singularity_report(&ch).is_singular);
    }
}
