//! Privacy-suppressed turnover histograms on a logarithmic axis.

use std::io::Write;

use crate::CliError;

/// Logarithmic bin layout: `bins_per_decade` bins per factor of ten,
/// spanning the data range.
#[derive(Debug, Clone, Copy)]
pub struct LogBinSpec {
    pub bins_per_decade: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    /// `None` means the bin was suppressed (fewer than `min_count`
    /// companies but not empty).
    pub count: Option<u64>,
}

/// Bins positive turnover values on a log scale and suppresses bins with
/// fewer than `min_count` companies. Zero and negative turnover is excluded
/// before binning; empty bins are dropped entirely.
pub fn histogram(values: &[f64], spec: LogBinSpec, min_count: u64) -> Vec<HistogramBin> {
    assert!(spec.bins_per_decade > 0, "bins_per_decade must be positive");
    let positive: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    if positive.is_empty() {
        return Vec::new();
    }
    let step = 1.0 / spec.bins_per_decade as f64;
    let bin_index = |v: f64| -> i64 { (v.log10() / step).floor() as i64 };
    let lowest = positive.iter().copied().fold(f64::INFINITY, f64::min);
    let highest = positive.iter().copied().fold(0.0f64, f64::max);
    let first = bin_index(lowest);
    let last = bin_index(highest);
    let mut counts = vec![0u64; (last - first + 1) as usize];
    for v in &positive {
        counts[(bin_index(*v) - first) as usize] += 1;
    }
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(offset, &c)| {
            let index = first + offset as i64;
            HistogramBin {
                low: 10f64.powf(index as f64 * step),
                high: 10f64.powf((index + 1) as f64 * step),
                count: if c < min_count { None } else { Some(c) },
            }
        })
        .collect()
}

/// Writes `bin_low,bin_high,count` with `suppressed` as the count marker for
/// suppressed bins.
pub fn write_histogram_csv<W: Write>(
    out: &mut W,
    bins: &[HistogramBin],
    header_comment: Option<&str>,
) -> Result<(), CliError> {
    if let Some(comment) = header_comment {
        writeln!(out, "# {comment}").map_err(|e| CliError::Data(e.to_string()))?;
    }
    writeln!(out, "bin_low,bin_high,count").map_err(|e| CliError::Data(e.to_string()))?;
    for bin in bins {
        let count = match bin.count {
            Some(c) => c.to_string(),
            None => "suppressed".to_string(),
        };
        writeln!(out, "{},{},{}", bin.low, bin.high, count)
            .map_err(|e| CliError::Data(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: LogBinSpec = LogBinSpec {
        bins_per_decade: 1,
    };

    #[test]
    fn bin_below_min_count_is_suppressed() {
        // 19 values in one decade, 20 in the next.
        let mut values = vec![5.0; 19];
        values.extend(vec![50.0; 20]);
        let bins = histogram(&values, SPEC, 20);
        assert_eq!(bins.len(), 2);
        assert_eq!(bins[0].count, None);
        assert_eq!(bins[1].count, Some(20));
    }

    #[test]
    fn boundary_count_is_emitted() {
        let values = vec![5.0; 20];
        let bins = histogram(&values, SPEC, 20);
        assert_eq!(bins[0].count, Some(20));
    }

    #[test]
    fn zero_and_negative_excluded() {
        let values = vec![0.0, -5.0, 10.0, 20.0];
        let bins = histogram(&values, SPEC, 1);
        let total: u64 = bins.iter().filter_map(|b| b.count).sum();
        assert_eq!(total, 2);
    }

    #[test]
    fn no_emitted_count_in_suppression_band() {
        // Adversarial mixture of bin occupancies around the threshold.
        let mut values = Vec::new();
        for (decade, n) in [(1.0, 1), (10.0, 19), (100.0, 20), (1000.0, 7), (1e4, 35)] {
            for i in 0..n {
                values.push(decade * (1.5 + 0.1 * i as f64 / n as f64));
            }
        }
        let bins = histogram(&values, SPEC, 20);
        for bin in &bins {
            if let Some(c) = bin.count {
                assert!(c >= 20, "leaked bin with count {c}");
            }
        }
        // Suppressed bins exist but never as zero.
        assert!(bins.iter().any(|b| b.count.is_none()));
    }

    #[test]
    fn csv_uses_suppression_marker() {
        let mut values = vec![5.0; 3];
        values.extend(vec![50.0; 25]);
        let bins = histogram(&values, SPEC, 20);
        let mut buf = Vec::new();
        write_histogram_csv(&mut buf, &bins, Some("test")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("suppressed"));
        assert!(text.contains(",25"));
    }
}
