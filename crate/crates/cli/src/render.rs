//! Human-readable rendering of evaluation reports, plus scree chart files.

use std::fmt::Write as _;

use crate::report::*;

/// At least six significant digits for every statistic. Values outside a
/// comfortable decimal window fall back to scientific notation.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0.000000".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-4..9).contains(&exp) {
        format!("{v:.5e}")
    } else {
        let places = (5 - exp).max(0) as usize;
        format!("{v:.places$}")
    }
}

fn opt6(v: Option<f64>) -> String {
    match v {
        Some(v) => sig6(v),
        None => "-".to_string(),
    }
}

/// Left-aligned first column, right-aligned numeric columns.
fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (c, cell) in row.iter().enumerate() {
            widths[c] = widths[c].max(cell.len());
        }
    }
    let mut out = String::new();
    let render_row = |out: &mut String, cells: &[String]| {
        for (c, cell) in cells.iter().enumerate() {
            if c > 0 {
                out.push_str("  ");
            }
            if c == 0 {
                let _ = write!(out, "{cell:<width$}", width = widths[c]);
            } else {
                let _ = write!(out, "{cell:>width$}", width = widths[c]);
            }
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    let header_cells: Vec<String> = headers.iter().map(|h| h.to_string()).collect();
    render_row(&mut out, &header_cells);
    let rule: Vec<String> = (0..cols).map(|c| "-".repeat(widths[c])).collect();
    render_row(&mut out, &rule);
    for row in rows {
        render_row(&mut out, row);
    }
    out
}

fn heading(out: &mut String, title: &str) {
    let _ = writeln!(out, "\n## {title}\n");
}

pub fn render_text(r: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} v{} - {} (schema {})",
        r.tool, r.tool_version, r.command, r.schema_version
    );
    if let Some(d) = &r.dataset {
        let _ = writeln!(
            out,
            "dataset: {} participants x {} items ({} rows dropped for missing cells)",
            d.participants, d.items, d.dropped_rows
        );
    }
    if !r.advisories.is_empty() {
        heading(&mut out, "Advisories");
        for a in &r.advisories {
            let _ = writeln!(out, "- {a}");
        }
    }
    if let Some(s) = &r.item_analysis {
        render_items(&mut out, s);
    }
    if let Some(s) = &r.efa {
        render_efa(&mut out, s);
    }
    if let Some(s) = &r.standardization {
        render_standardization(&mut out, s);
    }
    if let Some(s) = &r.reliability {
        render_reliability(&mut out, s);
    }
    if let Some(s) = &r.validity {
        render_validity(&mut out, s);
    }
    if let Some(s) = &r.fairness {
        render_fairness(&mut out, s);
    }
    if let Some(s) = &r.simulation {
        render_simulation(&mut out, s);
    }
    out
}

fn render_items(out: &mut String, s: &ItemAnalysisSection) {
    heading(out, "Item analysis");
    let _ = writeln!(
        out,
        "low-variance threshold: {}\n",
        sig6(s.low_variance_threshold)
    );
    let rows: Vec<Vec<String>> = s
        .items
        .iter()
        .map(|i| {
            vec![
                i.id.clone(),
                sig6(i.facility),
                sig6(i.variance),
                opt6(i.discrimination),
                opt6(i.corrected_discrimination),
                i.flags.join(","),
            ]
        })
        .collect();
    out.push_str(&table(
        &["item", "facility", "variance", "r_total", "r_rest", "flags"],
        &rows,
    ));
}

fn render_efa(out: &mut String, s: &EfaSection) {
    heading(out, "Factor analysis");
    let a = &s.advice;
    let _ = writeln!(
        out,
        "retention: K1 = {}, parallel analysis ({} replicates, {} criterion, seed {}) = {}",
        a.k1, a.parallel.replicates, a.parallel.criterion, a.parallel.seed, a.parallel.retained
    );
    let _ = writeln!(out, "chosen factors: {} (by {})\n", a.chosen, a.chosen_by);

    let rows: Vec<Vec<String>> = a
        .scree
        .iter()
        .enumerate()
        .map(|(i, p)| {
            vec![
                p.component.to_string(),
                sig6(p.eigenvalue),
                sig6(a.parallel.random_mean[i]),
                sig6(a.parallel.random_p95[i]),
            ]
        })
        .collect();
    out.push_str(&table(
        &["component", "eigenvalue", "random_mean", "random_p95"],
        &rows,
    ));

    if !a.vss.is_empty() {
        out.push('\n');
        let rows: Vec<Vec<String>> = a
            .vss
            .iter()
            .map(|v| vec![v.k.to_string(), sig6(v.criterion)])
            .collect();
        out.push_str(&table(&["vss_k", "criterion"], &rows));
    }

    for note in &s.notes {
        let _ = writeln!(out, "\nnote: {note}");
    }

    if let Some(sol) = &s.solution {
        let _ = writeln!(
            out,
            "\nsolution: {} extraction, {} rotation, {} iterations",
            sol.extraction, sol.rotation, sol.iterations
        );
        for note in &sol.notes {
            let _ = writeln!(out, "note: {note}");
        }
        if !sol.heywood_items.is_empty() {
            let _ = writeln!(
                out,
                "Heywood communalities clamped for: {}",
                sol.heywood_items.join(", ")
            );
        }
        out.push('\n');
        let k = sol.loadings.first().map_or(0, Vec::len);
        let mut headers: Vec<String> = vec!["item".to_string()];
        headers.extend((1..=k).map(|j| format!("F{j}")));
        headers.push("h2".to_string());
        headers.push("u2".to_string());
        let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = sol
            .items
            .iter()
            .enumerate()
            .map(|(i, id)| {
                let mut row = vec![id.clone()];
                row.extend(sol.loadings[i].iter().map(|v| sig6(*v)));
                row.push(sig6(sol.communalities[i]));
                row.push(sig6(sol.uniquenesses[i]));
                row
            })
            .collect();
        out.push_str(&table(&header_refs, &rows));
        let _ = writeln!(
            out,
            "\nexplained variance per factor: {}",
            sol.explained_variance
                .iter()
                .map(|v| sig6(*v))
                .collect::<Vec<_>>()
                .join(", ")
        );
        if k > 1 {
            let _ = writeln!(out, "factor correlations:");
            for row in &sol.factor_correlations {
                let cells: Vec<String> = row.iter().map(|v| sig6(*v)).collect();
                let _ = writeln!(out, "  {}", cells.join("  "));
            }
        }
    }

    if let Some(st) = &s.structure {
        let _ = writeln!(
            out,
            "\nstructure at |loading| >= {}: crossloading [{}], orphaned [{}], underidentified factors [{}]",
            sig6(st.salience_threshold),
            st.crossloading_items.join(", "),
            st.orphan_items.join(", "),
            st.underidentified_factors
                .iter()
                .map(|f| (f + 1).to_string())
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
}

fn render_standardization(out: &mut String, s: &StandardizationSection) {
    heading(out, "Standardization");
    let _ = writeln!(
        out,
        "norm: mean {} / sd {} ({})",
        sig6(s.norm_mean),
        sig6(s.norm_sd),
        s.norm_source
    );
    if let Some(t) = &s.transform {
        let _ = writeln!(out, "totals transformed with {t} before norming");
    }
    out.push('\n');
    // Full tables stay readable only for small samples; the JSON report
    // always carries every row.
    const MAX_ROWS: usize = 50;
    let shown = s.scores.len().min(MAX_ROWS);
    let rows: Vec<Vec<String>> = s.scores[..shown]
        .iter()
        .map(|r| {
            vec![
                r.participant.clone(),
                sig6(r.total),
                sig6(r.z),
                sig6(r.t),
                r.stanine.to_string(),
                r.sten.to_string(),
            ]
        })
        .collect();
    out.push_str(&table(
        &["participant", "total", "z", "T", "stanine", "sten"],
        &rows,
    ));
    if s.scores.len() > shown {
        let _ = writeln!(
            out,
            "... {} more rows in the machine-readable report",
            s.scores.len() - shown
        );
    }
}

fn render_reliability(out: &mut String, s: &ReliabilitySection) {
    heading(out, "Reliability");
    if let Some(a) = &s.cronbach_alpha {
        let _ = writeln!(
            out,
            "Cronbach alpha: {} ({} items, {} participants)",
            sig6(a.value),
            a.n_items,
            a.n_participants
        );
        if let Some(rows) = &a.alpha_if_deleted {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![r.item.clone(), sig6(r.alpha)])
                .collect();
            out.push_str(&table(&["item dropped", "alpha"], &body));
        }
    }
    if let Some(sh) = &s.split_half {
        let _ = writeln!(
            out,
            "split-half: r = {} between odd [{}] and even [{}]; Spearman-Brown full length = {}",
            sig6(sh.half_correlation),
            sh.odd_items.join(", "),
            sh.even_items.join(", "),
            sig6(sh.value)
        );
    }
    if let Some(rt) = &s.test_retest {
        let _ = writeln!(
            out,
            "test-retest ({}, {} pairs): {} (raw {})",
            rt.method,
            rt.n_pairs,
            sig6(rt.value),
            sig6(rt.raw)
        );
    }
    if let Some(sem) = &s.sem {
        let _ = writeln!(
            out,
            "SEM ({} form, reliability {} from {}): {}; 95% interval half-width {}",
            sem.form,
            sig6(sem.reliability),
            sem.reliability_source,
            sig6(sem.value),
            sig6(sem.ci_half_width)
        );
    }
    if let Some(ir) = &s.interrater {
        let _ = writeln!(out, "{}: {}", ir.statistic, sig6(ir.value));
        if let (Some(po), Some(pe)) = (ir.observed_agreement, ir.expected_agreement) {
            let _ = writeln!(
                out,
                "  observed agreement {}, expected {}",
                sig6(po),
                sig6(pe)
            );
        }
        if let Some(level) = &ir.level {
            let _ = writeln!(
                out,
                "  level {level}, {} pairable values, {} units skipped",
                ir.n_pairable.unwrap_or(0),
                ir.units_skipped.unwrap_or(0)
            );
        }
    }
}

fn render_validity(out: &mut String, s: &ValiditySection) {
    heading(out, "Validity");
    for (label, row) in [("predictive", &s.predictive), ("concurrent", &s.concurrent)] {
        if let Some(v) = row {
            let threshold = match v.meets_threshold {
                Some(true) => "; exceeds 0.5",
                Some(false) => "; does not exceed 0.5",
                None => "",
            };
            let _ = writeln!(
                out,
                "{label} (vs {}, {} on {} rows): r = {}{threshold}",
                v.criterion_column,
                v.method,
                v.n,
                sig6(v.correlation)
            );
        }
    }
    if let Some(d) = &s.differential {
        let _ = writeln!(
            out,
            "differential ({} vs {}): convergent {} - discriminant {} = {}{}",
            d.convergent_column,
            d.discriminant_column,
            sig6(d.convergent),
            sig6(d.discriminant),
            sig6(d.discrepancy),
            if d.concern {
                "; CONCERN: the test tracks the unrelated construct at least as strongly"
            } else {
                ""
            }
        );
    }
}

fn render_fairness(out: &mut String, s: &FairnessSection) {
    heading(out, "Fairness / DIF");
    if let Some(cut) = s.dichotomized_at {
        let _ = writeln!(out, "items dichotomized at scored value >= {}\n", sig6(cut));
    }
    let group_names: Vec<String> = s
        .group_facilities
        .first()
        .map(|r| r.facilities.iter().map(|f| f.group.clone()).collect())
        .unwrap_or_default();
    let mut headers: Vec<String> = vec!["item".to_string()];
    headers.extend(group_names.iter().cloned());
    headers.push("max_diff".to_string());
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = s
        .group_facilities
        .iter()
        .map(|r| {
            let mut row = vec![r.item.clone()];
            row.extend(r.facilities.iter().map(|f| sig6(f.value)));
            row.push(sig6(r.max_difference));
            row
        })
        .collect();
    out.push_str(&table(&header_refs, &rows));

    out.push('\n');
    let rows: Vec<Vec<String>> = s
        .dif
        .iter()
        .map(|d| {
            vec![
                d.item.clone(),
                d.method.clone(),
                sig6(d.statistic),
                sig6(d.p_value),
                sig6(d.effect),
                if d.flagged { "FLAG" } else { "" }.to_string(),
            ]
        })
        .collect();
    out.push_str(&table(
        &["item", "method", "statistic", "p", "effect", "flag"],
        &rows,
    ));
    let _ = writeln!(
        out,
        "\nDTF: {}/{} items flagged (proportion {}, warning threshold {}){}",
        s.dtf.items_flagged,
        s.dtf.items_total,
        sig6(s.dtf.proportion_flagged),
        sig6(s.dtf.threshold),
        if s.dtf.warning {
            "; WARNING: differential test functioning suspected"
        } else {
            ""
        }
    );
}

fn render_simulation(out: &mut String, s: &SimulationSection) {
    heading(out, "Simulation");
    let _ = writeln!(
        out,
        "{} model, seed {}: {} participants x {} items",
        s.model, s.seed, s.participants, s.items
    );
    if let Some(r) = s.implied_reliability {
        let _ = writeln!(out, "implied test-retest reliability: {}", sig6(r));
    }
    for w in &s.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    let _ = writeln!(out, "files: {}", s.files.join(", "));
}

/// CSV companion to the scree plot: one row per component with the
/// observed eigenvalue and the random baselines from parallel analysis.
pub fn scree_csv(advice: &AdviceReport) -> String {
    let mut out = String::from("component,eigenvalue,random_mean,random_p95\n");
    for (i, p) in advice.scree.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.component,
            p.eigenvalue,
            advice.parallel.random_mean[i],
            advice.parallel.random_p95[i]
        );
    }
    out
}

/// Minimal static scree plot: observed eigenvalues, random-mean and
/// random-p95 baselines, and the eigenvalue-1 rule.
pub fn scree_svg(advice: &AdviceReport) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const MARGIN: f64 = 50.0;
    let p = advice.scree.len().max(1);
    let y_max = advice
        .scree
        .iter()
        .map(|r| r.eigenvalue)
        .chain(advice.parallel.random_p95.iter().copied())
        .fold(1.0_f64, f64::max)
        * 1.05;
    let x = |component: usize| {
        if p == 1 {
            W / 2.0
        } else {
            MARGIN + (component - 1) as f64 / (p - 1) as f64 * (W - 2.0 * MARGIN)
        }
    };
    let y = |v: f64| H - MARGIN - (v.max(0.0) / y_max) * (H - 2.0 * MARGIN);
    let path = |values: &mut dyn Iterator<Item = f64>| {
        values
            .enumerate()
            .map(|(i, v)| format!("{:.2},{:.2}", x(i + 1), y(v)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let observed = path(&mut advice.scree.iter().map(|r| r.eigenvalue));
    let mean = path(&mut advice.parallel.random_mean.iter().copied());
    let p95 = path(&mut advice.parallel.random_p95.iter().copied());
    let unit = y(1.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN}" y1="{uy:.2}" x2="{rx}" y2="{uy:.2}" stroke="#bbbbbb" stroke-dasharray="2 4"/>"##,
        uy = unit,
        rx = W - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{by}" stroke="black"/>"#,
        by = H - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{by}" x2="{rx}" y2="{by}" stroke="black"/>"#,
        by = H - MARGIN,
        rx = W - MARGIN
    );
    let _ = writeln!(
        s,
        r##"<polyline points="{observed}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##
    );
    let _ = writeln!(
        s,
        r##"<polyline points="{mean}" fill="none" stroke="#d62728" stroke-dasharray="6 3"/>"##
    );
    let _ = writeln!(
        s,
        r##"<polyline points="{p95}" fill="none" stroke="#ff9896" stroke-dasharray="3 3"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="30" font-family="sans-serif" font-size="14">Scree plot: observed (solid), random mean (dashed), random p95 (dotted)</text>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{tx}" y="{ty}" font-family="sans-serif" font-size="12">component</text>"#,
        tx = W / 2.0 - 30.0,
        ty = H - 15.0
    );
    s.push_str("</svg>\n");
    s
}
