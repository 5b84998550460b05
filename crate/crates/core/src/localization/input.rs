//! Plain-text bearing lists: one `x y theta_deg alpha_deg` per line.

use crate::detection::BearingEstimate;
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Point2};

/// Parse bearings separated by whitespace and/or commas. `#` starts a
/// comment; blank lines are skipped. `theta_deg` is the bearing orientation
/// and `alpha_deg` the sector half-width, both in degrees.
pub fn parse_bearings(text: &str) -> Result<Vec<BearingEstimate>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields (x y theta_deg alpha_deg), found {}", fields.len()),
            });
        }
        let mut v = [0.0; 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Parse {
                line,
                message: format!("`{f}` is not a finite number"),
            })?;
        }
        let theta = wrap_angle(v[2].to_radians())?;
        let bearing = BearingEstimate::new(Point2::new(v[0], v[1]), theta, v[3].to_radians()).map_err(|e| {
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        out.push(bearing);
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no bearings found".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_separators_and_comments() {
        let text = "# sensors\n0 0 0 5\n\n5, 5, -90, 5  # second\n";
        let bs = parse_bearings(text).unwrap();
        assert_eq!(bs.len(), 2);
        assert_eq!(bs[1].position(), Point2::new(5.0, 5.0));
        assert!((bs[1].theta.degrees() - 270.0).abs() < 1e-9);
        assert!((bs[1].alpha - 5f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse_bearings("0 0 0 5\n1 2 three 5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = parse_bearings("0 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_bearings("0 0 0 60\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(parse_bearings("# nothing\n").is_err());
    }
}
