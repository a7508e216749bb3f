use super::RiskReport;

const W: f64 = 640.0;
const H: f64 = 440.0;
const PAD: f64 = 64.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Log-log SVG of mean risk against `n` with ±1 standard error bars, the
/// fitted line (solid) and a guide line of the target slope (dashed) through
/// the first point of each report.
pub fn risk_plot_svg(reports: &[RiskReport]) -> String {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .flat_map(|r| r.ladder_points())
        .filter(|(_, y)| *y > 0.0)
        .collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    if pts.is_empty() {
        svg.push_str("<text x=\"20\" y=\"40\">no data</text>\n</svg>\n");
        return svg;
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.log10()).collect();
    let (x0, x1) = bounds(&lx);
    let (y0, y1) = bounds(&ly);
    let sx = |x: f64| PAD + (x.log10() - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y.log10() - y0) / (y1 - y0) * (H - 2.0 * PAD);

    svg.push_str(&format!(
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    ));
    for e in (x0.ceil() as i32)..=(x1.floor() as i32) {
        let x = sx(10f64.powi(e));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">1e{e}</text>\n",
            H - PAD + 18.0
        ));
    }
    for e in (y0.ceil() as i32)..=(y1.floor() as i32) {
        let y = sy(10f64.powi(e));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{y:.1}\" text-anchor=\"end\">1e{e}</text>\n",
            PAD - 6.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">n</text>\n",
        W / 2.0,
        H - 16.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" transform=\"rotate(-90 16 {:.1})\" text-anchor=\"middle\">mean risk</text>\n",
        H / 2.0,
        H / 2.0
    ));

    for (ri, rep) in reports.iter().enumerate() {
        let color = COLORS[ri % COLORS.len()];
        let rows: Vec<_> = rep
            .rows
            .iter()
            .filter(|r| r.reps > 0 && r.mean_risk > 0.0)
            .collect();
        let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
            continue;
        };
        for r in &rows {
            let (x, y) = (sx(r.n as f64), sy(r.mean_risk));
            let lo = (r.mean_risk - r.stderr).max(10f64.powf(y0));
            let hi = r.mean_risk + r.stderr;
            svg.push_str(&format!(
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"{color}\"/>\n<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"3.5\" fill=\"{color}\"/>\n",
                sy(lo),
                sy(hi)
            ));
        }
        let (na, nb) = (first.n as f64, last.n as f64);
        let guide = |n: f64| first.mean_risk * (n / na).powf(rep.target_exponent);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{color}\" stroke-dasharray=\"6 4\"/>\n",
            sx(na),
            sy(guide(na)),
            sx(nb),
            sy(guide(nb))
        ));
        let mut label = format!("q={} target {:.3}", rep.q, rep.target_exponent);
        if let Some(fit) = &rep.fit {
            let f = fit.preferred();
            let line = |n: f64| (f.intercept + f.slope * n.ln()).exp();
            svg.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{color}\"/>\n",
                sx(na),
                sy(line(na)),
                sx(nb),
                sy(line(nb))
            ));
            label.push_str(&format!(", slope {:.3} ± {:.3}", f.slope, f.stderr));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{label}</text>\n",
            PAD + 8.0,
            PAD + 16.0 + 16.0 * ri as f64
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((hi - lo) * 0.08).max(0.05);
    (lo - pad, hi + pad)
}
