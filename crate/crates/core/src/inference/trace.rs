use serde::{Deserialize, Serialize};

use crate::model::Polarity;

use super::{RuleStatus, SlotRef};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub slot: SlotRef,
    pub polarity: Polarity,
    pub required: String,
    /// `None` while the slot is unanswered.
    pub observed: Option<String>,
    pub satisfied: bool,
}

/// Why a rule is sure, expected or excluded; one row per finding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub rule: String,
    pub consequent: String,
    pub rows: Vec<TraceRow>,
    pub status: RuleStatus,
}

fn escape_html(out: &mut String, text: &str) {
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            other => out.push(other),
        }
    }
}

/// Deterministic right-to-left HTML fragment for a trace.
pub fn render_trace_html(trace: &Trace) -> String {
    let mut out = String::new();
    let (status_class, status_label) = match trace.status {
        RuleStatus::Sure => ("sure", "نتيجة مؤكدة (sure)"),
        RuleStatus::Expected { .. } => ("expected", "نتيجة متوقعة (expected)"),
        RuleStatus::Excluded { .. } => ("excluded", "نتيجة مستبعدة (excluded)"),
    };

    out.push_str("<section class=\"rcses-trace\" dir=\"rtl\" data-rule=\"");
    escape_html(&mut out, &trace.rule);
    out.push_str("\">\n<h3 class=\"consequent\">");
    escape_html(&mut out, &trace.consequent);
    out.push_str("</h3>\n<table class=\"findings\">\n");
    out.push_str(
        "<thead><tr><th>المفهوم</th><th>الخاصية</th><th>الشرط</th><th>القيمة المدخلة</th><th>متحقق</th></tr></thead>\n<tbody>\n",
    );
    for row in &trace.rows {
        out.push_str(if row.satisfied {
            "<tr class=\"satisfied\"><td>"
        } else {
            "<tr class=\"unsatisfied\"><td>"
        });
        escape_html(&mut out, &row.slot.concept);
        out.push_str("</td><td>");
        escape_html(&mut out, &row.slot.property);
        out.push_str("</td><td>");
        out.push_str(match row.polarity {
            Polarity::MustEqual => "= ",
            Polarity::MustDiffer => "≠ ",
        });
        escape_html(&mut out, &row.required);
        out.push_str("</td><td>");
        match &row.observed {
            Some(v) => escape_html(&mut out, v),
            None => out.push_str("<span class=\"unanswered\">unanswered</span>"),
        }
        out.push_str("</td><td>");
        out.push_str(if row.satisfied { "✔" } else { "✘" });
        out.push_str("</td></tr>\n");
    }
    out.push_str("</tbody>\n</table>\n");
    out.push_str(&format!(
        "<p class=\"status status-{status_class}\" data-status=\"{status_class}\">{status_label}</p>\n"
    ));
    out.push_str("</section>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(value: &str, status: RuleStatus) -> Trace {
        Trace {
            rule: "R1".into(),
            consequent: "إنهاء الخدمة بالإستقالة".into(),
            rows: vec![TraceRow {
                slot: SlotRef {
                    concept: "الإستقالة".into(),
                    property: "Value".into(),
                },
                polarity: Polarity::MustEqual,
                required: value.into(),
                observed: Some(value.into()),
                satisfied: true,
            }],
            status,
        }
    }

    #[test]
    fn sure_fragment_has_consequent_and_marker() {
        let html = render_trace_html(&trace("تقديم الإستقالة وقبولها", RuleStatus::Sure));
        assert!(html.contains("إنهاء الخدمة بالإستقالة"));
        assert!(html.contains("data-status=\"sure\""));
        assert!(html.starts_with("<section class=\"rcses-trace\" dir=\"rtl\""));
        assert_eq!(html.matches("<tr class=").count(), 1);
    }

    #[test]
    fn kb_text_is_escaped() {
        let html = render_trace_html(&trace("<b>bold</b>", RuleStatus::Sure));
        assert!(!html.contains("<b>"));
        assert!(html.contains("&lt;b&gt;bold&lt;/b&gt;"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let t = trace("x", RuleStatus::Expected { unanswered: vec![] });
        assert_eq!(render_trace_html(&t), render_trace_html(&t));
    }
}
