//! Report rendering.
//!
//! Human formats (`table`, `markdown`) follow the layout of a pain listing:
//! pains grouped by kind, each group headed by its subtotal row, amounts
//! grouped with `'`. Machine formats (`csv`, `json`) are ungrouped and carry
//! every amount as a plain decimal string.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::domain::{Agent, PainKind};
use crate::money::Money;
use crate::valuation::{CeilingBasis, Evaluation, LineValuation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Table,
    Markdown,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!(
                "unknown report format {other:?}; expected table, markdown, csv or json"
            )),
        }
    }
}

pub fn render_report(e: &Evaluation, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => render_table(e),
        ReportFormat::Markdown => render_markdown(e),
        ReportFormat::Csv => render_csv(e),
        ReportFormat::Json => render_json(e),
    }
}

pub fn render_json(e: &Evaluation) -> String {
    let mut out = serde_json::to_string_pretty(e).expect("evaluation serializes");
    out.push('\n');
    out
}

const AGENT_COLUMNS: usize = 4;

fn subtotal_title(kind: PainKind) -> String {
    format!("Total annual value creation by solving {kind} pains")
}

fn agent_headers(e: &Evaluation) -> Vec<String> {
    let cur = e.currency.as_str();
    vec![
        "Frequency (annual)".to_string(),
        format!("Impact {cur}"),
        "Alleviation".to_string(),
        format!("Value (annual) {cur}"),
    ]
}

fn line_cells(line: Option<&LineValuation>) -> [String; AGENT_COLUMNS] {
    match line {
        None => std::array::from_fn(|_| "-".to_string()),
        Some(l) => [
            l.frequency.value().normalize().to_string(),
            l.impact.grouped_compact(),
            l.alleviation.value().normalize().to_string(),
            l.effective.grouped_compact(),
        ],
    }
}

/// Pains of one kind, as rows of (id, description, per-agent cells).
fn pain_rows(e: &Evaluation, kind: PainKind) -> Vec<Vec<String>> {
    let r = &e.report;
    r.pains
        .iter()
        .filter(|p| p.kind == kind)
        .map(|p| {
            let mut row = vec![p.id.to_string(), p.description.clone()];
            for a in &r.agents {
                row.extend(line_cells(r.line(p.id.get(), a.id.as_str())));
            }
            row
        })
        .collect()
}

fn subtotal_values(e: &Evaluation, kind: PainKind) -> Vec<Money> {
    let sub = e.report.kind(kind);
    e.report
        .agents
        .iter()
        .map(|a| {
            sub.agent(a.id.as_str())
                .map_or(Money::zero(e.currency), |v| v.effective)
        })
        .collect()
}

fn banner_text(e: &Evaluation, kind: PainKind) -> String {
    let values = subtotal_values(e, kind);
    let joined = values
        .iter()
        .map(Money::grouped_compact)
        .collect::<Vec<_>>()
        .join(" | ");
    let total = e.report.kind(kind).effective;
    if values.len() > 1 {
        format!(
            "{}: {joined} ({} in total)",
            subtotal_title(kind),
            total.grouped_compact()
        )
    } else {
        format!("{}: {joined}", subtotal_title(kind))
    }
}

fn basis_label(basis: CeilingBasis) -> &'static str {
    match basis {
        CeilingBasis::All => "all beneficiaries",
        CeilingBasis::CustomerOnly => "customer side only",
    }
}

fn agent_label<'a>(agents: &'a [Agent], id: &'a str) -> &'a str {
    agents
        .iter()
        .find(|a| a.id.as_str() == id)
        .map_or(id, |a| a.label.as_str())
}

fn summary_rows(e: &Evaluation) -> Vec<(String, String)> {
    let s = &e.summary;
    let q = &e.fee_quote;
    let mut rows = vec![
        (
            "Potential value creation (annual)".to_string(),
            e.report.total_potential.grouped(),
        ),
        ("Economic value created (annual)".to_string(), s.v_economic.grouped()),
        ("  customer side".to_string(), s.v_customer.grouped()),
        ("  provider side".to_string(), s.v_provider.grouped()),
        (
            format!("Price ceiling ({})", basis_label(e.ceiling_basis)),
            q.ceiling.grouped(),
        ),
        (
            format!("Fee (revenue share {})", q.share.normalize()),
            q.fee.grouped(),
        ),
        ("Retained by beneficiaries".to_string(), q.retained_by_beneficiaries.grouped()),
        ("Annualized cost".to_string(), s.annualized_cost.grouped()),
        ("Net economic value (annual)".to_string(), s.net_total.grouped()),
    ];
    for n in &s.net_by_agent {
        rows.push((
            format!("Net position {}", agent_label(&e.report.agents, n.agent.as_str())),
            format!(
                "{} (value {}, fee {})",
                n.net.grouped(),
                n.effective.grouped(),
                n.fee_allocation.grouped()
            ),
        ));
    }
    rows
}

enum Row {
    Cells(Vec<String>),
    Banner(String),
}

fn render_table(e: &Evaluation) -> String {
    let agents = &e.report.agents;
    let columns = 2 + AGENT_COLUMNS * agents.len();
    let mut header = vec!["Nr".to_string(), "Pain description".to_string()];
    for _ in agents {
        header.extend(agent_headers(e));
    }

    let mut rows = Vec::new();
    for kind in PainKind::ALL {
        rows.push(Row::Banner(banner_text(e, kind)));
        rows.extend(pain_rows(e, kind).into_iter().map(Row::Cells));
    }

    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        if let Row::Cells(cells) = row {
            for (w, c) in widths.iter_mut().zip(cells) {
                *w = (*w).max(c.chars().count());
            }
        }
    }
    // Agent group labels span their four columns.
    for (i, a) in agents.iter().enumerate() {
        let first = 2 + i * AGENT_COLUMNS;
        let span: usize =
            widths[first..first + AGENT_COLUMNS].iter().sum::<usize>() + 3 * (AGENT_COLUMNS - 1);
        let need = a.label.chars().count();
        if need > span {
            widths[first + AGENT_COLUMNS - 1] += need - span;
        }
    }
    let inner = |widths: &[usize]| widths.iter().sum::<usize>() + 3 * (widths.len() - 1);
    let widest_banner = rows
        .iter()
        .filter_map(|r| match r {
            Row::Banner(t) => Some(t.chars().count()),
            Row::Cells(_) => None,
        })
        .max()
        .unwrap_or(0);
    if widest_banner > inner(&widths) {
        widths[1] += widest_banner - inner(&widths);
    }
    let total_inner = inner(&widths);

    let pad = |text: &str, width: usize, right: bool| {
        let fill = width.saturating_sub(text.chars().count());
        if right {
            format!("{}{text}", " ".repeat(fill))
        } else {
            format!("{text}{}", " ".repeat(fill))
        }
    };
    let rule = |ch: char| {
        let parts: Vec<String> = widths.iter().map(|w| ch.to_string().repeat(w + 2)).collect();
        format!("+{}+\n", parts.join("+"))
    };
    let cells_line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| pad(c, widths[i], i != 1))
            .collect();
        format!("| {} |\n", parts.join(" | "))
    };

    let mut out = String::new();
    let _ = writeln!(out, "Pain portfolio {} ({})", e.portfolio_id, e.currency);
    out.push_str(&rule('-'));
    let mut group = format!("| {} ", pad("", widths[0] + 3 + widths[1], false));
    for (i, a) in agents.iter().enumerate() {
        let first = 2 + i * AGENT_COLUMNS;
        let span = widths[first..first + AGENT_COLUMNS].iter().sum::<usize>()
            + 3 * (AGENT_COLUMNS - 1);
        let _ = write!(group, "| {} ", pad(&a.label, span, false));
    }
    group.push_str("|\n");
    out.push_str(&group);
    out.push_str(&cells_line(&header));
    out.push_str(&rule('='));
    for row in &rows {
        match row {
            Row::Banner(text) => {
                let _ = writeln!(out, "| {} |", pad(text, total_inner, false));
                out.push_str(&rule('-'));
            }
            Row::Cells(cells) => {
                debug_assert_eq!(cells.len(), columns);
                out.push_str(&cells_line(cells));
            }
        }
    }
    out.push_str(&rule('-'));
    out.push('\n');

    let summary = summary_rows(e);
    let label_width = summary.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0);
    for (label, value) in summary {
        let _ = writeln!(out, "{}  {value}", pad(&format!("{label}:"), label_width + 1, false));
    }
    out
}

fn md_escape(text: &str) -> String {
    text.replace('|', "\\|")
}

fn render_markdown(e: &Evaluation) -> String {
    let agents = &e.report.agents;
    let mut header = vec!["Nr".to_string(), "Pain description".to_string()];
    for a in agents {
        for h in agent_headers(e) {
            header.push(format!("{}: {h}", md_escape(&a.label)));
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "## Pain portfolio {} ({})\n", md_escape(&e.portfolio_id), e.currency);
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let align: Vec<&str> = (0..header.len())
        .map(|i| if i == 1 { ":---" } else { "---:" })
        .collect();
    let _ = writeln!(out, "| {} |", align.join(" | "));
    for kind in PainKind::ALL {
        let mut cells = vec![String::new(), format!("**{}**", subtotal_title(kind))];
        for v in subtotal_values(e, kind) {
            cells.extend(["", "", ""].map(String::from));
            cells.push(format!("**{}**", v.grouped_compact()));
        }
        let _ = writeln!(out, "| {} |", cells.join(" | "));
        for row in pain_rows(e, kind) {
            let row: Vec<String> = row.iter().map(|c| md_escape(c)).collect();
            let _ = writeln!(out, "| {} |", row.join(" | "));
        }
    }
    out.push_str("\n| Metric | Amount |\n| :--- | ---: |\n");
    for (label, value) in summary_rows(e) {
        let _ = writeln!(out, "| {} | {} |", md_escape(label.trim()), value);
    }
    out
}

pub const REPORT_CSV_COLUMNS: [&str; 10] = [
    "record",
    "pain_id",
    "kind",
    "agent",
    "frequency_per_year",
    "impact",
    "alleviation",
    "potential",
    "effective",
    "amount",
];

fn render_csv(e: &Evaluation) -> String {
    let mut w = ::csv::Writer::from_writer(Vec::new());
    let mut put = |fields: [String; 10]| w.write_record(&fields).expect("in-memory write");
    put(REPORT_CSV_COLUMNS.map(String::from));
    let empty = String::new;
    let r = &e.report;
    for l in &r.lines {
        put([
            "line".into(),
            l.pain_id.to_string(),
            l.kind.to_string(),
            l.agent.to_string(),
            l.frequency.value().normalize().to_string(),
            l.impact.to_string(),
            l.alleviation.value().normalize().to_string(),
            l.potential.to_string(),
            l.effective.to_string(),
            empty(),
        ]);
    }
    for k in &r.per_kind {
        for a in &k.per_agent {
            put([
                "subtotal".into(),
                empty(),
                k.kind.to_string(),
                a.agent.to_string(),
                empty(),
                empty(),
                empty(),
                a.potential.to_string(),
                a.effective.to_string(),
                empty(),
            ]);
        }
    }
    for a in &r.per_agent {
        put([
            "agent_total".into(),
            empty(),
            empty(),
            a.agent.to_string(),
            empty(),
            empty(),
            empty(),
            a.potential.to_string(),
            a.effective.to_string(),
            empty(),
        ]);
    }
    put([
        "total".into(),
        empty(),
        empty(),
        empty(),
        empty(),
        empty(),
        empty(),
        r.total_potential.to_string(),
        r.total_effective.to_string(),
        empty(),
    ]);
    let s = &e.summary;
    let q = &e.fee_quote;
    let metrics = [
        ("price_ceiling", q.ceiling.to_string()),
        ("revenue_share", q.share.normalize().to_string()),
        ("fee", q.fee.to_string()),
        ("retained_by_beneficiaries", q.retained_by_beneficiaries.to_string()),
        ("v_economic_pot", s.v_economic_pot.to_string()),
        ("v_economic", s.v_economic.to_string()),
        ("v_customer", s.v_customer.to_string()),
        ("v_provider", s.v_provider.to_string()),
        ("annualized_cost", s.annualized_cost.to_string()),
        ("net_total", s.net_total.to_string()),
    ];
    for (name, value) in metrics {
        let mut row: [String; 10] = std::array::from_fn(|_| String::new());
        row[0] = name.into();
        row[9] = value;
        put(row);
    }
    for n in &s.net_by_agent {
        for (name, value) in [("fee_allocation", n.fee_allocation), ("net", n.net)] {
            let mut row: [String; 10] = std::array::from_fn(|_| String::new());
            row[0] = name.into();
            row[3] = n.agent.to_string();
            row[9] = value.to_string();
            put(row);
        }
    }
    let bytes = w.into_inner().expect("in-memory flush");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::valuation::{evaluate, EvaluationOptions};

    fn demo_eval() -> Evaluation {
        evaluate(&demo::portfolio(), &EvaluationOptions::default()).unwrap()
    }

    #[test]
    fn table_puts_subtotal_above_pains() {
        let text = render_report(&demo_eval(), ReportFormat::Table);
        let subtotal = text.find("6'520 | 4'700").expect("operational subtotal row");
        let pain1 = text.find("Missing information").unwrap();
        assert!(subtotal < pain1);
        assert!(text.contains("1'260 | 600"));
        assert!(text.contains("11'220 in total"));
        assert!(text.contains("1'860 in total"));
        for value in ["1'000", "500", "3'000", "2'520", "4'200"] {
            assert!(text.contains(&format!(" {value} |")), "{value} missing:\n{text}");
        }
        assert!(text.contains("13'080.00"));
        assert!(text.contains("6'540.00"));
    }

    #[test]
    fn table_lines_share_one_width() {
        let text = render_report(&demo_eval(), ReportFormat::Table);
        let widths: Vec<usize> = text
            .lines()
            .filter(|l| l.starts_with('|') || l.starts_with('+'))
            .map(|l| l.chars().count())
            .collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]), "{text}");
    }

    #[test]
    fn missing_agent_line_is_a_dash() {
        let text = render_report(&demo_eval(), ReportFormat::Table);
        let row = text.lines().find(|l| l.contains("Low machine performance")).unwrap();
        assert_eq!(row.matches(" - ").count(), 4, "{row}");
    }

    #[test]
    fn empty_portfolio_table() {
        let p = demo::portfolio().with_pains(&[]);
        let e = evaluate(&p, &EvaluationOptions::default()).unwrap();
        let text = render_report(&e, ReportFormat::Table);
        assert!(text.contains("Pain description"));
        assert!(text.contains("operational pains: 0 | 0"));
        assert!(text.contains("structural pains: 0 | 0"));
    }

    #[test]
    fn json_carries_plain_decimal_strings() {
        let text = render_report(&demo_eval(), ReportFormat::Json);
        assert!(text.contains("\"total_effective\": \"13080.00\""));
        assert!(text.contains("\"price_ceiling\": \"13080.00\""));
        assert!(!text.contains("13'080"));
    }

    #[test]
    fn markdown_groups_by_kind() {
        let text = render_report(&demo_eval(), ReportFormat::Markdown);
        assert!(text.contains("**6'520**"));
        assert!(text.contains("**4'700**"));
        let op = text.find("operational pains").unwrap();
        let st = text.find("structural pains").unwrap();
        let pain4 = text.find("Recurring revenue").unwrap();
        assert!(op < st && st < pain4);
    }

    #[test]
    fn csv_is_ungrouped() {
        let text = render_report(&demo_eval(), ReportFormat::Csv);
        assert!(text.starts_with("record,pain_id,"));
        assert!(text.contains("line,3,operational,provider,6,1000.00,0.7,6000.00,4200.00,"));
        assert!(text.contains("price_ceiling,,,,,,,,,13080.00"));
        assert!(!text.contains('\''));
    }
}
