//! Report emission: tab-separated grids and SVG bar/line charts. Output is
//! plain strings so commands can write them byte-for-byte reproducibly.

use crate::eval::{EvalReport, ModelKind, HORIZONS_DAYS};
use crate::train::{SweepResult, SweepRow};

/// One row per grid cell: AUROC mean/std plus the TD-vs-baseline test
/// columns (empty for the TD rows; only populated with two or more seeds).
pub fn report_tsv(report: &EvalReport) -> String {
    let mut out = String::from(
        "dataset\thorizon_days\tmodel\tmean_auroc\tstd_auroc\tper_seed\traw_p\tadj_p\trejected\n",
    );
    for ds in &report.datasets {
        for &h in &HORIZONS_DAYS {
            for model in &report.models {
                let cell = report.auroc_cell(*model, ds, h);
                let per_seed = cell
                    .per_seed
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                let (raw, adj, rej) = if *model == ModelKind::Td {
                    ("-".into(), "-".into(), "-".into())
                } else {
                    match report
                        .p_values
                        .iter()
                        .find(|c| c.baseline == *model && &c.dataset == ds && c.horizon_days == h)
                    {
                        Some(c) => (c.raw.to_string(), c.adjusted.to_string(), c.rejected.to_string()),
                        None => ("-".into(), "-".into(), "-".into()),
                    }
                };
                out.push_str(&format!(
                    "{ds}\t{h}\t{}\t{}\t{}\t{per_seed}\t{raw}\t{adj}\t{rej}\n",
                    model.label(),
                    cell.mean,
                    cell.std,
                ));
            }
        }
    }
    out
}

/// TD-vs-oracle value accuracy rows, present for simulator datasets only.
pub fn oracle_tsv(report: &EvalReport) -> Option<String> {
    if report.oracle.is_empty() {
        return None;
    }
    let mut out = String::from("dataset\tmean_mae\tmean_max_error\tper_seed_mae\n");
    for cell in &report.oracle {
        let per_seed = cell
            .per_seed_mae
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&format!(
            "{}\t{}\t{}\t{per_seed}\n",
            cell.dataset, cell.mean_mae, cell.mean_max
        ));
    }
    Some(out)
}

const PALETTE: [&str; 8] = [
    "#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4", "#8c613c", "#dc7ec0", "#797979",
];

fn significance_marks(adj_p: f64) -> &'static str {
    if adj_p <= 0.001 {
        "***"
    } else if adj_p <= 0.01 {
        "**"
    } else if adj_p <= 0.05 {
        "*"
    } else {
        ""
    }
}

/// Grouped bar chart of mean AUROC per horizon and model with 95% CI
/// whiskers (mean ± 1.96 sd/sqrt(n)); asterisks mark baselines whose
/// TD comparison survives the BY adjustment.
pub fn report_svg(report: &EvalReport, dataset: &str) -> String {
    let models = &report.models;
    let n_seeds = report.seeds.len() as f64;
    let width = 960.0;
    let height = 420.0;
    let margin_l = 70.0;
    let margin_b = 60.0;
    let margin_t = 50.0;
    let plot_w = width - margin_l - 40.0;
    let plot_h = height - margin_t - margin_b;

    // y range padded around the data
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &h in &HORIZONS_DAYS {
        for m in models {
            let c = report.auroc_cell(*m, dataset, h);
            let ci = 1.96 * c.std / n_seeds.sqrt();
            lo = lo.min(c.mean - ci);
            hi = hi.max(c.mean + ci);
        }
    }
    let lo = (lo - 0.03).max(0.0);
    let hi = (hi + 0.04).min(1.0);
    let y_of = |v: f64| margin_t + plot_h * (1.0 - (v - lo) / (hi - lo));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">AUROC by mortality horizon — {dataset}</text>\n",
        width / 2.0
    ));
    // y axis with gridlines
    let mut tick = (lo * 20.0).ceil() / 20.0;
    while tick <= hi {
        let y = y_of(tick);
        svg.push_str(&format!(
            "<line x1=\"{margin_l}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>\n",
            margin_l + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{tick:.2}</text>\n",
            margin_l - 6.0,
            y + 4.0
        ));
        tick += 0.05;
    }
    svg.push_str(&format!(
        "<line x1=\"{margin_l}\" y1=\"{margin_t}\" x2=\"{margin_l}\" y2=\"{:.2}\" stroke=\"#333333\"/>\n",
        margin_t + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{margin_l}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#333333\"/>\n",
        margin_t + plot_h,
        margin_l + plot_w,
        margin_t + plot_h
    ));

    let group_w = plot_w / HORIZONS_DAYS.len() as f64;
    let bar_w = (group_w * 0.8) / models.len() as f64;
    for (gi, &h) in HORIZONS_DAYS.iter().enumerate() {
        let gx = margin_l + gi as f64 * group_w + group_w * 0.1;
        for (mi, m) in models.iter().enumerate() {
            let c = report.auroc_cell(*m, dataset, h);
            let ci = 1.96 * c.std / n_seeds.sqrt();
            let x = gx + mi as f64 * bar_w;
            let y = y_of(c.mean);
            let base = y_of(lo);
            svg.push_str(&format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
                bar_w * 0.9,
                base - y,
                PALETTE[mi % PALETTE.len()]
            ));
            let cx = x + bar_w * 0.45;
            let (y1, y2) = (y_of(c.mean + ci), y_of(c.mean - ci));
            svg.push_str(&format!(
                "<line x1=\"{cx:.2}\" y1=\"{y1:.2}\" x2=\"{cx:.2}\" y2=\"{y2:.2}\" stroke=\"#222222\" stroke-width=\"1.2\"/>\n"
            ));
            if *m != ModelKind::Td {
                if let Some(p) = report
                    .p_values
                    .iter()
                    .find(|c| c.baseline == *m && c.dataset == dataset && c.horizon_days == h)
                {
                    let marks = significance_marks(p.adjusted);
                    if !marks.is_empty() {
                        svg.push_str(&format!(
                            "<text x=\"{cx:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{marks}</text>\n",
                            y1 - 3.0
                        ));
                    }
                }
            }
        }
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{h}-day</text>\n",
            gx + group_w * 0.4,
            margin_t + plot_h + 18.0
        ));
    }
    // legend
    let mut lx = margin_l;
    let ly = height - 18.0;
    for (mi, m) in models.iter().enumerate() {
        svg.push_str(&format!(
            "<rect x=\"{lx:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n",
            ly - 9.0,
            PALETTE[mi % PALETTE.len()]
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{ly:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            lx + 14.0,
            m.label()
        ));
        lx += 90.0;
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{ly:.2}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#555555\">whiskers: mean ± 1.96·sd/√n over {} seeds; * adj p ≤ .05, ** ≤ .01, *** ≤ .001</text>\n",
        lx + 10.0,
        report.seeds.len()
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Sweep table: one row per delay, five horizon columns plus selection.
pub fn sweep_tsv(sweep: &SweepResult) -> String {
    let mut out = String::from("delay_hours\tauroc_1d\tauroc_3d\tauroc_7d\tauroc_14d\tauroc_28d\tselected\n");
    for r in &sweep.rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.delay_hours,
            r.val_auroc[0],
            r.val_auroc[1],
            r.val_auroc[2],
            r.val_auroc[3],
            r.val_auroc[4],
            r.delay_hours == sweep.selected_delay_hours
        ));
    }
    out
}

/// Line chart of validation AUROC against the state-to-state delay, one
/// polyline per horizon; the selected delay carries an asterisk.
pub fn sweep_svg(sweep: &SweepResult) -> String {
    let width = 760.0;
    let height = 400.0;
    let margin_l = 70.0;
    let margin_b = 60.0;
    let margin_t = 50.0;
    let plot_w = width - margin_l - 140.0;
    let plot_h = height - margin_t - margin_b;
    let rows: &[SweepRow] = &sweep.rows;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in rows {
        for v in r.val_auroc {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let lo = (lo - 0.02).max(0.0);
    let hi = (hi + 0.02).min(1.0);
    let x_of = |i: usize| margin_l + plot_w * (i as f64 + 0.5) / rows.len() as f64;
    let y_of = |v: f64| margin_t + plot_h * (1.0 - (v - lo) / (hi - lo));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">Validation AUROC by state-to-state delay</text>\n",
        width / 2.0
    ));
    svg.push_str(&format!(
        "<line x1=\"{margin_l}\" y1=\"{margin_t}\" x2=\"{margin_l}\" y2=\"{:.2}\" stroke=\"#333333\"/>\n",
        margin_t + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{margin_l}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#333333\"/>\n",
        margin_t + plot_h,
        margin_l + plot_w,
        margin_t + plot_h
    ));
    for (hi_idx, &h) in HORIZONS_DAYS.iter().enumerate() {
        let color = PALETTE[hi_idx % PALETTE.len()];
        let points: Vec<String> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| format!("{:.2},{:.2}", x_of(i), y_of(r.val_auroc[hi_idx])))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            points.join(" ")
        ));
        for (i, r) in rows.iter().enumerate() {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                x_of(i),
                y_of(r.val_auroc[hi_idx])
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{h}-day</text>\n",
            margin_l + plot_w + 12.0,
            margin_t + 16.0 * hi_idx as f64 + 10.0
        ));
    }
    for (i, r) in rows.iter().enumerate() {
        let marker = if r.delay_hours == sweep.selected_delay_hours {
            " *"
        } else {
            ""
        };
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}h{marker}</text>\n",
            x_of(i),
            margin_t + plot_h + 18.0,
            r.delay_hours
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{margin_l}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#555555\">* selected by 28-day validation AUROC (ties to the smallest delay)</text>\n",
        height - 14.0
    ));
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{AurocCell, PValueCell};

    fn toy_report() -> EvalReport {
        let models = vec![ModelKind::Supervised { horizon_days: 1 }, ModelKind::Td];
        let datasets = vec!["internal-test".to_string(), "shifted-external".to_string()];
        let mut auroc = Vec::new();
        let mut p_values = Vec::new();
        for ds in &datasets {
            for &h in &HORIZONS_DAYS {
                for (mi, m) in models.iter().enumerate() {
                    let base = 0.7 + 0.02 * mi as f64 + 0.001 * h as f64;
                    auroc.push(AurocCell {
                        model: *m,
                        dataset: ds.clone(),
                        horizon_days: h,
                        per_seed: vec![base, base + 0.01, base - 0.01],
                        mean: base,
                        std: 0.01,
                    });
                }
                p_values.push(PValueCell {
                    baseline: models[0],
                    dataset: ds.clone(),
                    horizon_days: h,
                    t_stat: 2.0,
                    raw: 0.04,
                    adjusted: 0.09,
                    rejected: false,
                    degenerate: false,
                });
            }
        }
        EvalReport {
            seeds: vec![0, 1, 2],
            datasets,
            models,
            auroc,
            p_values,
            oracle: vec![],
            fdr_level: 0.05,
        }
    }

    #[test]
    fn tsv_has_one_row_per_grid_cell() {
        let report = toy_report();
        let tsv = report_tsv(&report);
        let rows: Vec<&str> = tsv.lines().skip(1).collect();
        assert_eq!(rows.len(), 2 * 5 * 2); // datasets x horizons x models
        for row in rows {
            assert_eq!(row.split('\t').count(), 9);
        }
    }

    #[test]
    fn emission_is_deterministic() {
        let report = toy_report();
        assert_eq!(report_tsv(&report), report_tsv(&report));
        assert_eq!(
            report_svg(&report, "internal-test"),
            report_svg(&report, "internal-test")
        );
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let report = toy_report();
        let svg = report_svg(&report, "shifted-external");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 5 * 2 + 2); // bars + legend swatches
        assert!(svg.contains("shifted-external"));
    }

    #[test]
    fn sweep_outputs_mark_selection() {
        let sweep = SweepResult {
            rows: vec![
                SweepRow {
                    delay_hours: 4.0,
                    val_auroc: [0.7, 0.71, 0.72, 0.73, 0.74],
                },
                SweepRow {
                    delay_hours: 24.0,
                    val_auroc: [0.71, 0.72, 0.73, 0.74, 0.78],
                },
            ],
            selected_delay_hours: 24.0,
        };
        let tsv = sweep_tsv(&sweep);
        assert!(tsv.lines().nth(2).unwrap().ends_with("true"));
        assert!(tsv.lines().nth(1).unwrap().ends_with("false"));
        let svg = sweep_svg(&sweep);
        assert!(svg.contains("24h *"));
        assert_eq!(svg.matches("<polyline").count(), 5);
    }
}
