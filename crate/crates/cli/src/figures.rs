use scalar_dpc::dpc::{analyze, NoiseMixture, ScalarDpcConfig, Shaping};

use crate::config::{config_err, CliResult, ShapingSetup};
use crate::output::{csv, float_row};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Convergence,
}

pub const DEFAULT_ORDERS: [usize; 7] = [4, 8, 16, 32, 64, 128, 256];

/// `x, q/d_max, p, q/d_min` over the shaping grid.
pub fn fig2(setup: &ShapingSetup) -> CliResult<String> {
    let input = setup.shaping()?.input()?;
    let (lower, upper) = (input.lower()?, input.upper()?);
    let rows: Vec<Vec<String>> = input
        .p
        .centers()
        .zip(input.p.values())
        .map(|(x, &p)| float_row(&[x, lower.eval(x), p, upper.eval(x)]))
        .collect();
    Ok(csv(&["x", "q_over_d_max", "p", "q_over_d_min"], &rows))
}

/// `z', lower, p, upper` for one shaped term plus Gaussian noise of equal power.
pub fn fig3(setup: &ShapingSetup) -> CliResult<String> {
    let shaping = setup.shaping()?;
    let power = shaping.input()?.power;
    let cfg = ScalarDpcConfig::new(shaping, 1.0, NoiseMixture::gaussian(power.sqrt()))?;
    let an = analyze(&cfg)?;
    let rows: Vec<Vec<String>> = an
        .z_prime
        .centers()
        .zip(an.z_prime.values())
        .map(|(z, &p)| float_row(&[z, an.z_lower.eval(z), p, an.z_upper.eval(z)]))
        .collect();
    Ok(csv(&["z", "p_lower", "p", "p_upper"], &rows))
}

pub const CONVERGENCE_HEADER: [&str; 14] = [
    "M", "A", "sigma_x", "d_min", "d_max", "p_min", "p_max", "h_y_lo", "h_y_hi", "h_y", "rate",
    "rate_lo", "rate_hi", "target",
];

/// One real channel with gain 1, input power 1/2 and Gaussian noise of variance 1/2, shaping
/// matched to the power with `A = ratio * sigma_x`, for each `M`.
pub fn convergence(orders: &[usize], ratio: f64) -> CliResult<String> {
    if orders.is_empty() || orders.iter().any(|&m| m < 2) {
        return config_err("convergence orders must be non-empty and at least 2");
    }
    let target = 0.5 * 2f64.ln();
    let mut rows = Vec::new();
    for &m in orders {
        let shaping = Shaping::matched(0.5, m, ratio)?;
        let cfg = ScalarDpcConfig::new(shaping, 1.0, NoiseMixture::gaussian(0.5f64.sqrt()))?;
        let an = analyze(&cfg)?;
        let ext = an.inputs.own.extrema;
        let (hlo, hhi) = an.h_y_bounds.unwrap_or((f64::NAN, f64::NAN));
        let (rlo, rhi) = an.rate_bounds.unwrap_or((f64::NAN, f64::NAN));
        let mut row = vec![m.to_string()];
        row.extend(float_row(&[
            shaping.interval,
            shaping.sigma_x,
            ext.d_min,
            ext.d_max,
            an.y_extrema.p_min,
            an.y_extrema.p_max,
            hlo,
            hhi,
            an.report.h_y,
            an.report.rate,
            rlo,
            rhi,
            target,
        ]));
        rows.push(row);
    }
    Ok(csv(&CONVERGENCE_HEADER, &rows))
}

pub fn file_name(which: Figure) -> &'static str {
    match which {
        Figure::Fig2 => "fig2.csv",
        Figure::Fig3 => "fig3.csv",
        Figure::Convergence => "convergence.csv",
    }
}
