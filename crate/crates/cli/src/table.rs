use snapmark_core::model::ListedCapture;

const TITLE_WIDTH: usize = 40;

fn clip(s: &str, width: usize) -> String {
    if s.chars().count() <= width {
        return s.to_owned();
    }
    let mut out: String = s.chars().take(width - 1).collect();
    out.push('…');
    out
}

/// Fixed-width table: id, relative time, title, liked, resource count.
pub fn render(rows: &[ListedCapture]) -> String {
    let header = ["ID", "WHEN", "TITLE", "LIKED", "RESOURCES"];
    let body: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.record.capture_id.clone(),
                r.relative_time.clone(),
                clip(&r.record.title.replace('\n', " "), TITLE_WIDTH),
                if r.record.liked { "♥".into() } else { String::new() },
                r.record.resources.len().to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        format!("{}\n", padded.join("  ").trim_end())
    };
    let mut out = line(&header.map(String::from));
    for row in &body {
        out.push_str(&line(row));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(render(&[]), "ID  WHEN  TITLE  LIKED  RESOURCES\n");
    }

    #[test]
    fn clips_long_titles() {
        assert_eq!(clip("abcdef", 4), "abc…");
        assert_eq!(clip("abc", 4), "abc");
    }
}
