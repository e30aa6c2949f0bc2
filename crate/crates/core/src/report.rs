//! CSV rendering of results. Floats carry 17 significant digits, enough to
//! round-trip every `f64`.

use std::fmt::Write;

use crate::density::DensityEstimate;
use crate::ensemble::PathRecord;
use crate::pricing::PriceEstimate;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub const DENSITY_HEADER: &str = "x,p_malliavin,se_malliavin,p_kde,se_kde";
pub const WEIGHTS_HEADER: &str = "path_index,avg_variance,weight,denominator";
pub const PRICES_HEADER: &str = "method,value,se,ci_lo,ci_hi";

/// `kde` may be absent (too few samples); its columns are then NaN.
pub fn density_csv(malliavin: &DensityEstimate, kde: Option<&DensityEstimate>) -> String {
    let mut out = String::new();
    writeln!(out, "{DENSITY_HEADER}").unwrap();
    for i in 0..malliavin.x.len() {
        let (pk, sk) = kde.map_or((f64::NAN, f64::NAN), |k| (k.p_hat[i], k.se[i]));
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(malliavin.x[i]),
            fmt_f64(malliavin.p_hat[i]),
            fmt_f64(malliavin.se[i]),
            fmt_f64(pk),
            fmt_f64(sk)
        )
        .unwrap();
    }
    out
}

pub fn weights_csv(records: &[PathRecord]) -> String {
    let mut out = String::new();
    writeln!(out, "{WEIGHTS_HEADER}").unwrap();
    for r in records {
        writeln!(out, "{},{},{},{}", r.path_index, fmt_f64(r.avg_variance), fmt_f64(r.weight), fmt_f64(r.denominator)).unwrap();
    }
    out
}

pub fn prices_csv(prices: &[PriceEstimate]) -> String {
    let mut out = String::new();
    writeln!(out, "{PRICES_HEADER}").unwrap();
    for p in prices {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.method.as_str(),
            fmt_f64(p.value),
            fmt_f64(p.std_error),
            fmt_f64(p.ci95.0),
            fmt_f64(p.ci95.1)
        )
        .unwrap();
    }
    out
}
