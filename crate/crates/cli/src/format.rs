/// `0.2384 -> "23.840%"`.
pub fn pct(v: f64) -> String {
    if v.is_finite() {
        format!("{:.3}%", v * 100.0)
    } else {
        "-".into()
    }
}

/// Left-aligned text table with two-space gutters.
pub struct Table {
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<const N: usize>(header: [&str; N]) -> Self {
        Table { rows: vec![header.iter().map(|s| s.to_string()).collect()] }
    }

    pub fn row<const N: usize>(&mut self, cells: [String; N]) {
        self.rows.push(cells.to_vec());
    }

    pub fn render(&self) -> String {
        let cols = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let widths: Vec<usize> = (0..cols)
            .map(|c| self.rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in &self.rows {
            let line: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_style() {
        assert_eq!(pct(0.2384), "23.840%");
        assert_eq!(pct(0.0), "0.000%");
        assert_eq!(pct(f64::NAN), "-");
    }

    #[test]
    fn columns_align() {
        let mut t = Table::new(["a", "long"]);
        t.row(["wide cell".into(), "x".into()]);
        assert_eq!(t.render(), "a          long\nwide cell  x\n");
    }
}
