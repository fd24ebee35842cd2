use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::Variable;
use crate::metrics::{CellKey, MetricReport};
use crate::persona::enumerate_ablations;

use super::svg::{nice_max, Frame, Svg, MUTED, PALETTE};
use super::ReportError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureKind {
    LabelFrequency,
    InfoGain,
    JsSubgroups,
    EntropyJs,
    Cramer,
    Ablation,
}

impl FigureKind {
    pub const ALL: [FigureKind; 6] = [
        FigureKind::LabelFrequency,
        FigureKind::InfoGain,
        FigureKind::JsSubgroups,
        FigureKind::EntropyJs,
        FigureKind::Cramer,
        FigureKind::Ablation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureKind::LabelFrequency => "label-frequency",
            FigureKind::InfoGain => "info-gain",
            FigureKind::JsSubgroups => "js-subgroups",
            FigureKind::EntropyJs => "entropy-js",
            FigureKind::Cramer => "cramer",
            FigureKind::Ablation => "ablation",
        }
    }
}

impl std::str::FromStr for FigureKind {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FigureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ReportError::UnknownFigure(s.to_string()))
    }
}

type Files = Vec<(String, String)>;

/// Renders `kind` from `report` as SVG files `(file name, contents)`.
///
/// Figures that show a single comparison use the first population cell in
/// key order.
pub fn emit_plots(report: &MetricReport, kind: FigureKind) -> Result<Files, ReportError> {
    match kind {
        FigureKind::LabelFrequency => label_frequency(report),
        FigureKind::InfoGain => info_gain(report),
        FigureKind::JsSubgroups => js_subgroups(report),
        FigureKind::EntropyJs => entropy_js(report),
        FigureKind::Cramer => cramer(report),
        FigureKind::Ablation => ablation(report),
    }
}

fn missing(family: &'static str) -> ReportError {
    ReportError::MissingMetrics(family)
}

fn short(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        format!("{}…", s.chars().take(n - 1).collect::<String>())
    }
}

/// First population cell carrying `metric`.
fn first_cell(report: &MetricReport, metric: &str) -> Option<CellKey> {
    report
        .cells()
        .find(|(k, m)| k.subgroup.is_empty() && k.wave.is_some() && m.get(metric).copied().flatten().is_some())
        .map(|(k, _)| k.clone())
}

fn sub(key: &CellKey, subgroup: String) -> CellKey {
    CellKey { subgroup, ..key.clone() }
}

fn label_frequency(report: &MetricReport) -> Result<Files, ReportError> {
    let mut series: BTreeMap<String, BTreeMap<u32, f64>> = BTreeMap::new();
    for (k, m) in report.cells() {
        let Some(w) = k.wave else { continue };
        if !k.subgroup.is_empty() {
            continue;
        }
        for (name, v) in m {
            if let (Some(label), Some(v)) = (name.strip_prefix("pct_survey:"), v) {
                series.entry(label.to_string()).or_default().entry(w).or_insert(*v);
            }
        }
    }
    if series.is_empty() {
        return Err(missing("label percentages"));
    }
    let waves: Vec<u32> = series.values().flat_map(|s| s.keys().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut ranked: Vec<(&String, f64)> = series
        .iter()
        .map(|(l, s)| (l, s.values().sum::<f64>() / waves.len() as f64))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    let top: Vec<&String> = ranked.iter().take(5).map(|(l, _)| *l).collect();
    let y_max = nice_max(series.values().flat_map(|s| s.values().copied()).fold(0.0, f64::max));

    let mut svg = Svg::new(900.0, 480.0);
    let f = Frame { left: 70.0, top: 50.0, width: 560.0, height: 360.0, y_max };
    f.draw(&mut svg, "Answer categories over waves (top 5 highlighted)", "share of labels (%)");
    let x = |i: usize| {
        if waves.len() == 1 {
            f.left + f.width / 2.0
        } else {
            f.left + f.width * i as f64 / (waves.len() - 1) as f64
        }
    };
    for (i, w) in waves.iter().enumerate() {
        svg.text(x(i), f.bottom() + 18.0, &w.to_string(), 11.0, "middle");
    }
    svg.text(f.left + f.width / 2.0, f.bottom() + 38.0, "wave", 11.0, "middle");
    // muted lines first so highlighted ones are drawn on top
    let mut order: Vec<&String> = series.keys().filter(|l| !top.contains(l)).collect();
    order.extend(top.iter().copied());
    for label in order {
        let rank = top.iter().position(|t| *t == label);
        let (color, width) = rank.map_or((MUTED, 1.0), |r| (PALETTE[r], 2.5));
        let pts: Vec<(f64, f64)> = waves
            .iter()
            .enumerate()
            .filter_map(|(i, w)| series[label].get(w).map(|v| (x(i), f.y(*v))))
            .collect();
        svg.polyline(&pts, color, width);
        for (px, py) in &pts {
            svg.circle(*px, *py, if rank.is_some() { 3.0 } else { 1.5 }, color);
        }
    }
    for (r, label) in top.iter().enumerate() {
        let y = 70.0 + 22.0 * r as f64;
        svg.rect(650.0, y - 9.0, 14.0, 10.0, PALETTE[r]);
        svg.text(670.0, y, &short(label, 36), 11.0, "start");
    }
    Ok(vec![("label-frequency.svg".into(), svg.finish())])
}

fn bar_chart_frame(n_groups: usize, y_max: f64) -> (Svg, Frame) {
    let width = (120.0 + 70.0 * n_groups as f64).max(420.0);
    let svg = Svg::new(width + 40.0, 480.0);
    let f = Frame { left: 70.0, top: 90.0, width: width - 90.0, height: 260.0, y_max };
    (svg, f)
}

fn info_gain(report: &MetricReport) -> Result<Files, ReportError> {
    let key = first_cell(report, "entropy_llm").ok_or_else(|| missing("information gain"))?;
    let h = report.get(&key, "entropy_llm").flatten().unwrap_or(0.0);
    let mut files = Vec::new();
    for &var in Variable::ALL {
        let values: Vec<(&str, Option<f64>, Option<f64>)> = var
            .domain()
            .into_iter()
            .map(|v| {
                let k = sub(&key, format!("{var}={v}"));
                (v, report.get(&k, "entropy_llm").flatten(), report.get(&k, "info_gain_llm").flatten())
            })
            .collect();
        if values.iter().all(|(_, e, _)| e.is_none()) {
            continue;
        }
        let y_max = nice_max(values.iter().filter_map(|(_, e, _)| *e).fold(h, f64::max));
        let (mut svg, f) = bar_chart_frame(values.len(), y_max);
        f.draw(&mut svg, &format!("Population vs conditional entropy: {var}"), "entropy (bits)");
        let slot = f.width / values.len() as f64;
        for (i, (v, e, ig)) in values.iter().enumerate() {
            let x0 = f.left + slot * i as f64 + slot * 0.15;
            let bw = slot * 0.35;
            svg.rect(x0, f.y(h), bw, f.bottom() - f.y(h), MUTED);
            if let Some(e) = e {
                svg.rect(x0 + bw, f.y(*e), bw, f.bottom() - f.y(*e), PALETTE[0]);
            }
            if let Some(ig) = ig {
                svg.text(x0 + bw, f.y(h.max(e.unwrap_or(0.0))) - 4.0, &format!("{ig:+.2}"), 9.0, "middle");
            }
            svg.rotated_text(x0 + bw, f.bottom() + 14.0, &short(v, 28), 10.0);
        }
        svg.legend(f.left, 50.0, f.width, &[("population H(Y)".to_string(), MUTED), ("H(Y|X=g)".to_string(), PALETTE[0])]);
        files.push((format!("info-gain-{var}.svg"), svg.finish()));
    }
    if files.is_empty() {
        return Err(missing("information gain"));
    }
    Ok(files)
}

fn js_subgroups(report: &MetricReport) -> Result<Files, ReportError> {
    let first = first_cell(report, "js_distance").ok_or_else(|| missing("subgroup JS distances"))?;
    // one series per wave of the first model and variant
    let series: Vec<CellKey> = report
        .cells()
        .filter(|(k, m)| {
            k.subgroup.is_empty() && k.wave.is_some() && k.model == first.model && k.variant == first.variant && m.contains_key("js_distance")
        })
        .map(|(k, _)| k.clone())
        .collect();
    let mut files = Vec::new();
    for &var in Variable::ALL {
        let domain = var.domain();
        let grid: Vec<Vec<Option<f64>>> = domain
            .iter()
            .map(|v| series.iter().map(|k| report.get(&sub(k, format!("{var}={v}")), "js_distance").flatten()).collect())
            .collect();
        if grid.iter().flatten().all(Option::is_none) {
            continue;
        }
        let y_max = nice_max(grid.iter().flatten().flatten().copied().fold(0.0, f64::max));
        let (mut svg, f) = bar_chart_frame(domain.len(), y_max);
        f.draw(&mut svg, &format!("JS distance by subgroup: {var}"), "JS distance");
        let slot = f.width / domain.len() as f64;
        let bw = slot * 0.8 / series.len() as f64;
        for (i, (v, row)) in domain.iter().zip(&grid).enumerate() {
            let x0 = f.left + slot * i as f64 + slot * 0.1;
            for (s, val) in row.iter().enumerate() {
                if let Some(val) = val {
                    svg.rect(x0 + bw * s as f64, f.y(*val), bw, f.bottom() - f.y(*val), PALETTE[s % PALETTE.len()]);
                }
            }
            svg.rotated_text(x0 + slot * 0.4, f.bottom() + 14.0, &short(v, 28), 10.0);
        }
        let entries: Vec<(String, &str)> = series
            .iter()
            .enumerate()
            .map(|(s, k)| (format!("wave {}", k.wave.unwrap_or_default()), PALETTE[s % PALETTE.len()]))
            .collect();
        svg.legend(f.left, 50.0, f.width, &entries);
        files.push((format!("js-subgroups-{var}.svg"), svg.finish()));
    }
    if files.is_empty() {
        return Err(missing("subgroup JS distances"));
    }
    Ok(files)
}

fn entropy_js(report: &MetricReport) -> Result<Files, ReportError> {
    let family = "subgroup entropies and JS distances";
    let key = first_cell(report, "js_distance").ok_or_else(|| missing(family))?;
    let pts: Vec<(String, f64, f64)> = report
        .cells()
        .filter(|(k, _)| k.wave == key.wave && k.model == key.model && k.variant == key.variant && k.subgroup.contains('='))
        .filter_map(|(k, m)| {
            Some((k.subgroup.clone(), m.get("entropy_survey").copied().flatten()?, m.get("js_distance").copied().flatten()?))
        })
        .collect();
    if pts.is_empty() {
        return Err(missing(family));
    }
    // x axis spans the observed entropies in half-bit steps
    let x_min = (pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min) * 2.0).floor() / 2.0;
    let x_max = ((pts.iter().map(|p| p.1).fold(0.0, f64::max) * 2.0).ceil() / 2.0).max(x_min + 0.5);
    let y_max = nice_max(pts.iter().map(|p| p.2).fold(0.0, f64::max));
    let mut svg = Svg::new(860.0, 640.0);
    let f = Frame { left: 70.0, top: 70.0, width: 740.0, height: 500.0, y_max };
    f.draw(&mut svg, "Survey entropy vs JS distance per subgroup", "JS distance");
    let x = |v: f64| f.left + f.width * (v - x_min) / (x_max - x_min);
    for i in 0..=5 {
        let v = x_min + (x_max - x_min) * i as f64 / 5.0;
        svg.line(x(v), f.bottom(), x(v), f.bottom() + 4.0, "#333", 1.0);
        svg.text(x(v), f.bottom() + 16.0, &format!("{v:.2}"), 10.0, "middle");
    }
    svg.text(f.left + f.width / 2.0, f.bottom() + 36.0, "survey entropy (bits)", 11.0, "middle");
    let vars: Vec<&str> = Variable::ALL.iter().map(|v| v.as_str()).collect();
    let color_of = |var: &str| PALETTE[vars.iter().position(|v| *v == var).unwrap_or(0) % PALETTE.len()];
    for (label, ex, ey) in &pts {
        let (var, value) = label.split_once('=').unwrap_or(("", label));
        let (px, py) = (x(*ex), f.y(*ey));
        svg.circle(px, py, 3.5, color_of(var));
        svg.text(px + 5.0, py - 4.0, &short(value, 22), 8.0, "start");
    }
    let entries: Vec<(String, &str)> = vars.iter().map(|v| (v.to_string(), color_of(v))).collect();
    svg.legend(f.left, 46.0, f.width, &entries);
    Ok(vec![("entropy-js.svg".into(), svg.finish())])
}

fn cramer(report: &MetricReport) -> Result<Files, ReportError> {
    let family = "Cramér's V grid";
    let key = report
        .cells()
        .find(|(k, m)| k.subgroup.is_empty() && m.keys().any(|n| n.starts_with("cramers_v")))
        .map(|(k, _)| k.clone())
        .ok_or_else(|| missing(family))?;
    let mut axes: Vec<&str> = Variable::ALL.iter().map(|v| v.as_str()).collect();
    axes.push("answer");
    let mut files = Vec::new();
    for source in ["survey", "llm"] {
        let value = |a: &str, b: &str| -> Option<f64> {
            if a == b {
                return Some(1.0);
            }
            let name = match (a, b) {
                ("answer", v) | (v, "answer") => format!("cramers_v_{source}:{v}"),
                _ => {
                    let (ia, ib) = (axes.iter().position(|x| *x == a), axes.iter().position(|x| *x == b));
                    let (p, q) = if ia < ib { (a, b) } else { (b, a) };
                    format!("cramers_v:{p}~{q}")
                }
            };
            report.get(&key, &name).flatten()
        };
        if axes.iter().all(|v| v == &"answer" || value(v, "answer").is_none()) {
            continue;
        }
        let cell = 62.0;
        let (left, top) = (150.0, 60.0);
        let mut svg = Svg::new(left + cell * axes.len() as f64 + 30.0, top + cell * axes.len() as f64 + 130.0);
        svg.text(left + cell * axes.len() as f64 / 2.0, 30.0, &format!("Cramér's V ({source} answers)"), 14.0, "middle");
        for (i, a) in axes.iter().enumerate() {
            for (j, b) in axes.iter().enumerate() {
                let (x, y) = (left + cell * j as f64, top + cell * i as f64);
                match value(a, b) {
                    Some(v) => {
                        let shade = (255.0 - 200.0 * v.clamp(0.0, 1.0)).round() as u8;
                        svg.rect(x, y, cell - 2.0, cell - 2.0, &format!("#{shade:02x}{shade:02x}ff"));
                        svg.text(x + cell / 2.0, y + cell / 2.0 + 4.0, &format!("{v:.2}"), 11.0, "middle");
                    }
                    None => {
                        svg.rect(x, y, cell - 2.0, cell - 2.0, "#f4f4f4");
                        svg.text(x + cell / 2.0, y + cell / 2.0 + 4.0, "nan", 10.0, "middle");
                    }
                }
            }
            svg.text(left - 6.0, top + cell * i as f64 + cell / 2.0 + 4.0, a, 11.0, "end");
            svg.rotated_text(left + cell * i as f64 + cell / 2.0, top + cell * axes.len() as f64 + 14.0, a, 11.0);
        }
        files.push((format!("cramer-{source}.svg"), svg.finish()));
    }
    if files.is_empty() {
        return Err(missing(family));
    }
    Ok(files)
}

fn ablation(report: &MetricReport) -> Result<Files, ReportError> {
    let family = "ablation JS distances";
    let first = first_cell(report, "js_distance").ok_or_else(|| missing(family))?;
    let order: Vec<String> = enumerate_ablations().iter().map(ToString::to_string).collect();
    let mut bars: Vec<(String, f64)> = report
        .cells()
        .filter(|(k, _)| k.subgroup.is_empty() && k.wave == first.wave && k.model == first.model)
        .filter_map(|(k, m)| Some((k.variant.clone(), m.get("js_distance").copied().flatten()?)))
        .collect();
    if bars.len() < 2 {
        return Err(missing(family));
    }
    bars.sort_by_key(|(v, _)| order.iter().position(|o| o == v).unwrap_or(usize::MAX));
    let y_max = nice_max(bars.iter().map(|b| b.1).fold(0.0, f64::max));
    let (mut svg, f) = bar_chart_frame(bars.len(), y_max);
    f.draw(&mut svg, "JS distance to survey by prompt variant", "JS distance");
    let slot = f.width / bars.len() as f64;
    for (i, (variant, v)) in bars.iter().enumerate() {
        let x0 = f.left + slot * i as f64 + slot * 0.15;
        let color = if variant.starts_with("1_var") {
            PALETTE[1]
        } else if variant.starts_with("without") {
            PALETTE[2]
        } else {
            PALETTE[0]
        };
        svg.rect(x0, f.y(*v), slot * 0.7, f.bottom() - f.y(*v), color);
        svg.text(x0 + slot * 0.35, f.y(*v) - 4.0, &format!("{v:.3}"), 9.0, "middle");
        svg.rotated_text(x0 + slot * 0.35, f.bottom() + 14.0, variant, 10.0);
    }
    Ok(vec![("ablation.svg".into(), svg.finish())])
}
