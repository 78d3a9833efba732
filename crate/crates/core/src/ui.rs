//! Static form site generated from the panel and field facts.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::graph::{labels, KnowledgeBase, Value};

const INDEX_TEMPLATE: &str = "<!DOCTYPE html>
<html lang=\"en\">
<head>
<meta charset=\"utf-8\">
<title>Parthenos UI</title>
<link rel=\"stylesheet\" href=\"style.css\">
</head>
<body>
<main>
{{sections}}</main>
<script src=\"app.js\"></script>
</body>
</html>
";

const STYLE: &str = "body {
  font-family: sans-serif;
  margin: 2rem;
  background: #f4f4f4;
}

section.panel {
  background: #fff;
  border: 1px solid #ccc;
  border-radius: 4px;
  margin-bottom: 1.5rem;
  padding: 1rem 1.5rem;
}

section.panel h2 {
  margin-top: 0;
}

section.panel form {
  display: grid;
  grid-template-columns: max-content 1fr;
  gap: 0.5rem 1rem;
  align-items: center;
}
";

const SCRIPT: &str = "// Forms are rendered statically; submitting them does nothing.
document.querySelectorAll(\"section.panel form\").forEach(function (form) {
  form.addEventListener(\"submit\", function (event) {
    event.preventDefault();
  });
});
";

pub const SITE_FILES: [&str; 3] = ["index.html", "style.css", "app.js"];

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn position(kb: &KnowledgeBase, id: &str) -> i64 {
    kb.property(id, labels::POSITION).and_then(Value::as_int).unwrap_or(i64::MAX)
}

fn visible(kb: &KnowledgeBase, id: &str) -> bool {
    kb.property(id, labels::VISIBLE).and_then(Value::as_bool).unwrap_or(true)
}

fn label<'a>(kb: &'a KnowledgeBase, id: &'a str) -> &'a str {
    kb.property(id, labels::LABEL)
        .and_then(Value::as_atom)
        .unwrap_or_else(|| id.split_once(':').map(|(_, n)| n).unwrap_or(id))
}

/// `<input>` type for a field, from the type of the attribute it reflects.
pub fn input_kind(kb: &KnowledgeBase, field_id: &str) -> &'static str {
    let ty = kb
        .target(field_id, labels::REFLECTS)
        .and_then(|attr| kb.target(attr, labels::HAS_TYPE));
    match ty {
        Some("type:int") | Some("type:double") => "number",
        Some("type:boolean") => "checkbox",
        _ => "text",
    }
}

/// Visible panels in ascending position order.
pub fn visible_panels(kb: &KnowledgeBase) -> Vec<&str> {
    let mut panels: Vec<&str> = kb.vertices_with_label(labels::PANEL).filter(|p| visible(kb, p)).collect();
    panels.sort_by_key(|p| (position(kb, p), p.to_string()));
    panels
}

/// Markup for one panel: a heading and one labeled input per visible field.
/// Empty when the panel is hidden.
pub fn render_panel(kb: &KnowledgeBase, panel_id: &str) -> String {
    if !visible(kb, panel_id) {
        return String::new();
    }
    let class = panel_id.strip_prefix("panel:").unwrap_or(panel_id);
    let mut fields: Vec<&str> = kb
        .out_edges(panel_id)
        .filter(|(_, e)| e.label == labels::HAS_FIELD)
        .map(|(_, e)| e.to.as_str())
        .filter(|f| visible(kb, f))
        .collect();
    fields.sort_by_key(|f| (position(kb, f), f.to_string()));

    let mut out = String::new();
    let _ = writeln!(out, "<section class=\"panel\" id=\"panel-{}\">", escape(class));
    let _ = writeln!(out, "  <h2>{}</h2>", escape(label(kb, panel_id)));
    out.push_str("  <form>\n");
    for f in fields {
        let attr = f.rsplit_once('.').map(|(_, a)| a).unwrap_or(f);
        let input_id = escape(&format!("{class}-{attr}"));
        let _ = writeln!(out, "    <label for=\"{input_id}\">{}</label>", escape(label(kb, f)));
        let _ = writeln!(
            out,
            "    <input type=\"{}\" id=\"{input_id}\" name=\"{}\">",
            input_kind(kb, f),
            escape(attr)
        );
    }
    out.push_str("  </form>\n</section>\n");
    out
}

pub fn render_index(kb: &KnowledgeBase) -> String {
    let sections: String = visible_panels(kb).into_iter().map(|p| render_panel(kb, p)).collect();
    INDEX_TEMPLATE.replace("{{sections}}", &sections)
}

/// Writes `index.html`, `style.css` and `app.js` into `out_dir`.
pub fn generate_site(kb: &KnowledgeBase, out_dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let contents = [render_index(kb), STYLE.to_string(), SCRIPT.to_string()];
    let mut written = Vec::new();
    for (name, text) in SITE_FILES.iter().zip(contents) {
        let path = out_dir.join(name);
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::extract_sources;

    fn kb() -> KnowledgeBase {
        extract_sources(&[
            (
                "Book.pss".into(),
                "@Panel(position=2)\nclass Book {\n@UiField String title;\n@UiField(visible=false) String subject;\n@UiField(position=1) String author;\n}".into(),
            ),
            (
                "Librarian.pss".into(),
                "@Panel(label=\"Staff & <Co>\", position=1)\nclass Librarian {\n@UiField String name;\n@UiField double salary;\n@UiField int officeNo;\n@UiField boolean active;\n}".into(),
            ),
            ("Loan.pss".into(), "@Panel(visible=false)\nclass Loan { @UiField int days; }".into()),
        ])
        .unwrap()
    }

    #[test]
    fn sections_follow_positions_and_visibility() {
        let html = render_index(&kb());
        assert_eq!(html.matches("<section").count(), 2);
        assert_eq!(html.matches("<input").count(), 6);
        let lib = html.find("panel-Librarian").unwrap();
        let book = html.find("panel-Book").unwrap();
        assert!(lib < book);
        assert!(html.contains("<h2>Staff &amp; &lt;Co&gt;</h2>"));
        assert!(html.find("Book-author").unwrap() < html.find("Book-title").unwrap());
    }

    #[test]
    fn input_kinds_by_type() {
        let html = render_panel(&kb(), "panel:Librarian");
        assert!(html.contains("<input type=\"text\" id=\"Librarian-name\""));
        assert!(html.contains("<input type=\"number\" id=\"Librarian-salary\""));
        assert!(html.contains("<input type=\"number\" id=\"Librarian-officeNo\""));
        assert!(html.contains("<input type=\"checkbox\" id=\"Librarian-active\""));
    }

    #[test]
    fn hidden_panel_renders_nothing() {
        assert_eq!(render_panel(&kb(), "panel:Loan"), "");
    }

    #[test]
    fn empty_model_still_writes_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let kb = extract_sources(&[]).unwrap();
        let files = generate_site(&kb, dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        let html = fs::read_to_string(dir.path().join("index.html")).unwrap();
        assert!(html.contains("<main>\n</main>"));
    }

    #[test]
    fn byte_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_site(&kb(), a.path()).unwrap();
        generate_site(&kb(), b.path()).unwrap();
        for f in SITE_FILES {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        }
    }
}
