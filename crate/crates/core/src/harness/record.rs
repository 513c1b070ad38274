//! CSV result records.
//!
//! Layout: a `# seed=<seed>` comment line, the fixed header, one row per
//! record, then one `# flag,...` comment line per record that could not be
//! produced. Floats use shortest round-trip formatting.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "scheme,case,quantity,n_steps,n_paths,estimate,std_error,reference,abs_error,wall_time_ms";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub scheme: String,
    pub case: String,
    pub quantity: String,
    pub n_steps: usize,
    pub n_paths: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub reference: f64,
    pub abs_error: f64,
    pub wall_time_ms: f64,
}

impl ResultRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        scheme: &str,
        case: &str,
        quantity: &str,
        n_steps: usize,
        n_paths: u64,
        estimate: f64,
        std_error: f64,
        reference: f64,
        wall_time_ms: f64,
    ) -> Result<Self> {
        let r = Self {
            scheme: scheme.into(),
            case: case.into(),
            quantity: quantity.into(),
            n_steps,
            n_paths,
            estimate,
            std_error,
            reference,
            abs_error: (estimate - reference).abs(),
            wall_time_ms,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.estimate,
            self.std_error,
            self.reference,
            self.abs_error,
            self.wall_time_ms,
        ];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite field in record {} / {} / n={}",
                self.scheme, self.quantity, self.n_steps
            )));
        }
        Ok(())
    }

    /// Copy with the wall time zeroed, for comparisons across runs.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_ms: 0.0,
            ..self.clone()
        }
    }
}

/// A record that could not be produced, with the reason.
#[derive(Clone, Debug, PartialEq)]
pub struct Flag {
    pub scheme: String,
    pub case: String,
    pub quantity: String,
    pub n_steps: usize,
    pub message: String,
}

impl Flag {
    fn to_line(&self) -> String {
        let msg = self.message.replace(['\n', '\r'], " ");
        format!(
            "# flag,{},{},{},{},{}",
            self.scheme, self.case, self.quantity, self.n_steps, msg
        )
    }
}

pub fn write_csv<W: Write>(
    mut out: W,
    seed: u64,
    records: &[ResultRecord],
    flags: &[Flag],
) -> Result<()> {
    writeln!(out, "# seed={seed}")?;
    {
        let mut w = csv::WriterBuilder::new()
            .has_headers(true)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        if records.is_empty() {
            w.write_record(CSV_HEADER.split(','))?;
        }
        for r in records {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    for f in flags {
        writeln!(out, "{}", f.to_line())?;
    }
    Ok(())
}

/// Parsed CSV contents.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvContents {
    pub seed: Option<u64>,
    pub records: Vec<ResultRecord>,
    /// Raw `# flag,...` lines without the leading `# `.
    pub flags: Vec<String>,
}

pub fn read_csv<R: Read>(input: R) -> Result<CsvContents> {
    let mut text = String::new();
    BufReader::new(input).read_to_string(&mut text)?;
    let mut seed = None;
    let mut flags = Vec::new();
    for line in text.as_bytes().lines() {
        let line = line?;
        if let Some(s) = line.strip_prefix("# seed=") {
            seed = Some(
                s.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad seed line '{line}'")))?,
            );
        } else if let Some(f) = line.strip_prefix("# flag,") {
            flags.push(format!("flag,{f}"));
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Config(format!(
            "unexpected CSV header '{}'",
            header.join(",")
        )));
    }
    let records = rdr
        .deserialize()
        .map(|r| {
            let r: ResultRecord = r?;
            r.validate()?;
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CsvContents {
        seed,
        records,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<ResultRecord> {
        vec![
            ResultRecord::new(
                "ivi",
                "1",
                "variance_swap",
                1,
                1000,
                0.1 + 0.2,
                1e-17,
                0.3,
                12.5,
            )
            .unwrap(),
            ResultRecord::new(
                "qe",
                "custom",
                "iv_slice(0.8:1)",
                64,
                2,
                -1.0 / 3.0,
                0.0,
                5e-324,
                0.0,
            )
            .unwrap(),
        ]
    }

    #[test]
    fn header_and_seed_line() {
        let mut buf = Vec::new();
        write_csv(&mut buf, 42, &sample(), &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# seed=42"));
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert!(!text.contains('\r'));
        assert!(text.contains("0.30000000000000004"));
    }

    #[test]
    fn round_trip_is_identical() {
        let flags = vec![Flag {
            scheme: "ivi".into(),
            case: "2".into(),
            quantity: "iv(0.5)".into(),
            n_steps: 3,
            message: "price outside bounds".into(),
        }];
        let mut first = Vec::new();
        write_csv(&mut first, 7, &sample(), &flags).unwrap();
        let parsed = read_csv(first.as_slice()).unwrap();
        assert_eq!(parsed.seed, Some(7));
        assert_eq!(parsed.records, sample());
        assert_eq!(parsed.flags.len(), 1);
        let mut second = Vec::new();
        write_csv(&mut second, 7, &parsed.records, &flags).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn abs_error_is_recomputable() {
        for r in sample() {
            assert!((r.abs_error - (r.estimate - r.reference).abs()).abs() <= 1e-15);
        }
    }

    #[test]
    fn empty_output_still_has_header() {
        let mut buf = Vec::new();
        write_csv(&mut buf, 1, &[], &[]).unwrap();
        let parsed = read_csv(buf.as_slice()).unwrap();
        assert!(parsed.records.is_empty());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ResultRecord::new("ivi", "1", "x", 1, 2, f64::NAN, 0.0, 0.0, 0.0).is_err());
        let bad = "# seed=1\nscheme,case,quantity\nivi,1,x\n";
        assert!(read_csv(bad.as_bytes()).is_err());
    }
}
