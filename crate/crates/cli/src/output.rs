//! Deterministic artifact formatting.
//!
//! Sweeps are CSV with `#`-prefixed provenance lines; distributions are JSON.
//! Every float is rendered with 12 significant digits so identical configs
//! produce byte-identical artifacts.

use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Fixed 12-significant-digit scientific rendering.
pub fn fmt_sig12(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    format!("{:.11e}", x)
}

/// Round to 12 significant digits; used before JSON serialization so the
/// emitted decimal literals are short and stable.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{:.11e}", x).parse().unwrap_or(x)
}

/// Write to the path, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::domain(format!("cannot write {}: {e}", path.display()))),
        None => {
            let stdout = std::io::stdout();
            let mut handle = stdout.lock();
            handle
                .write_all(content.as_bytes())
                .map_err(|e| CliError::domain(format!("cannot write to stdout: {e}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_is_stable() {
        assert_eq!(fmt_sig12(0.2), "2.00000000000e-1");
        assert_eq!(fmt_sig12(-6.20371158738e-4), "-6.20371158738e-4");
        assert_eq!(fmt_sig12(0.0), "0.00000000000e0");
        assert_eq!(fmt_sig12(f64::NAN), "nan");
    }

    #[test]
    fn round_sig12_shortens() {
        assert_eq!(round_sig12(0.2), 0.2);
        assert_eq!(round_sig12(1.0 / 3.0), 0.333333333333);
    }
}
