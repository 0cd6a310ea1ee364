use std::io::Write;

/// CSV writer with the project's conventions: header row, comma separator,
/// LF line endings, minimal quoting.
pub fn csv_writer<W: Write>(inner: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(inner)
}

/// Shortest decimal text that parses back to exactly `v`. Non-finite values
/// are written as `inf`, `-inf` or `NaN`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.0, -0.0, 1.0, 0.1, 1e-300, 123456.789, f64::MAX, f64::NEG_INFINITY] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn writer_uses_lf() {
        let mut w = csv_writer(Vec::new());
        w.write_record(["a", "b"]).unwrap();
        w.write_record(["1", "x,y"]).unwrap();
        let bytes = w.into_inner().unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n1,\"x,y\"\n");
    }
}
