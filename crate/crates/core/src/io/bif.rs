//! Reader and writer for the Bayesian Interchange Format (BIF).
//!
//! Accepted dialect:
//!
//! ```text
//! network name { property ...; }
//! variable x { type discrete [ 2 ] { yes, no }; property ...; }
//! probability ( x ) { table 0.3, 0.7; }
//! probability ( y | x ) {
//!   (yes) 0.1, 0.9;
//!   default 0.5, 0.5;
//! }
//! probability ( y | x ) { table 0.1, 0.5, 0.9, 0.5; }
//! ```
//!
//! A conditional `table` lists cells with the child varying fastest, then
//! the parents in declaration order. `//` and `/* */` comments are ignored.
//! Every row must sum to one within 1e-6 and is then renormalized exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::estimation::Cpt;
use crate::network::BayesianNetwork;
use crate::potential::Potential;
use crate::variable::Variable;

pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
struct Token {
    text: String,
    line: usize,
    column: usize,
}

fn is_punct(c: char) -> bool {
    matches!(c, '{' | '}' | '(' | ')' | '[' | ']' | ',' | ';' | '|')
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |c: char, line: &mut usize, col: &mut usize| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(c, &mut line, &mut col);
            i += 1;
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            i += 2;
            col += 2;
            loop {
                if i + 1 >= chars.len() {
                    return Err(Error::Parse { line: l0, column: c0, message: "unterminated comment".into() });
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    i += 2;
                    col += 2;
                    break;
                }
                advance(chars[i], &mut line, &mut col);
                i += 1;
            }
        } else if is_punct(c) {
            out.push(Token { text: c.to_string(), line, column: col });
            i += 1;
            col += 1;
        } else {
            let (l0, c0) = (line, col);
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() && !is_punct(chars[i]) {
                if chars[i] == '/' && matches!(chars.get(i + 1), Some('/') | Some('*')) {
                    break;
                }
                i += 1;
                col += 1;
            }
            out.push(Token { text: chars[start..i].iter().collect(), line: l0, column: c0 });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn err_at(&self, tok: Option<&Token>, message: impl Into<String>) -> Error {
        let (line, column) = tok.map_or(self.end, |t| (t.line, t.column));
        Error::Parse { line, column, message: message.into() }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<Token> {
        let t = self.tokens.get(self.pos).cloned().ok_or_else(|| self.err_at(None, "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, text: &str) -> Result<Token> {
        let t = self.next()?;
        if t.text != text {
            return Err(self.err_at(Some(&t), format!("expected `{text}`, found `{}`", t.text)));
        }
        Ok(t)
    }

    fn word(&mut self) -> Result<Token> {
        let t = self.next()?;
        if t.text.len() == 1 && t.text.chars().all(is_punct) {
            return Err(self.err_at(Some(&t), format!("expected a name, found `{}`", t.text)));
        }
        Ok(t)
    }

    fn at(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.text == text)
    }

    fn skip_until_semicolon(&mut self) -> Result<()> {
        while self.next()?.text != ";" {}
        Ok(())
    }

    /// Skips a balanced `{ ... }` block whose opening brace is next.
    fn skip_block(&mut self) -> Result<()> {
        self.expect("{")?;
        let mut depth = 1;
        while depth > 0 {
            match self.next()?.text.as_str() {
                "{" => depth += 1,
                "}" => depth -= 1,
                _ => {}
            }
        }
        Ok(())
    }

    /// Comma-separated words up to (not including) `close`.
    fn word_list(&mut self, close: &str) -> Result<Vec<Token>> {
        let mut out = Vec::new();
        while !self.at(close) {
            out.push(self.word()?);
            if self.at(",") {
                self.next()?;
            }
        }
        Ok(out)
    }

    fn number(&mut self) -> Result<f64> {
        let t = self.word()?;
        let v: f64 = t.text.parse().map_err(|_| self.err_at(Some(&t), format!("`{}` is not a number", t.text)))?;
        if !v.is_finite() || v < 0.0 {
            return Err(self.err_at(Some(&t), format!("probability `{}` must be finite and non-negative", t.text)));
        }
        Ok(v)
    }

    fn numbers_until_semicolon(&mut self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        while !self.at(";") {
            out.push(self.number()?);
            if self.at(",") {
                self.next()?;
            }
        }
        self.expect(";")?;
        Ok(out)
    }
}

struct RawBlock {
    at: Token,
    child: Token,
    parents: Vec<Token>,
    rows: Vec<(Option<Vec<Token>>, Vec<f64>, Token)>,
    table: Option<(Vec<f64>, Token)>,
}

/// Parses a BIF document into a validated network.
pub fn parse_network(text: &str) -> Result<BayesianNetwork<f64>> {
    let tokens = tokenize(text)?;
    let end = tokens.last().map_or((1, 1), |t| (t.line, t.column + t.text.chars().count()));
    let mut p = Parser { tokens, pos: 0, end };
    let mut name = String::from("unnamed");
    let mut variables: Vec<Variable> = Vec::new();
    let mut blocks: Vec<RawBlock> = Vec::new();

    while let Some(t) = p.peek().cloned() {
        match t.text.as_str() {
            "network" => {
                p.next()?;
                name = p.word()?.text;
                p.skip_block()?;
            }
            "variable" => {
                p.next()?;
                let vname = p.word()?;
                p.expect("{")?;
                let mut levels = None;
                while !p.at("}") {
                    let kw = p.word()?;
                    match kw.text.as_str() {
                        "type" => {
                            let kind = p.word()?;
                            if kind.text != "discrete" {
                                return Err(p.err_at(Some(&kind), "only discrete variables are supported"));
                            }
                            p.expect("[")?;
                            let nt = p.word()?;
                            let n: usize = nt.text.parse().map_err(|_| p.err_at(Some(&nt), "expected a level count"))?;
                            p.expect("]")?;
                            p.expect("{")?;
                            let lv = p.word_list("}")?;
                            p.expect("}")?;
                            p.expect(";")?;
                            if lv.len() != n {
                                return Err(p.err_at(Some(&nt), format!("declared {n} levels but listed {}", lv.len())));
                            }
                            levels = Some(lv.into_iter().map(|t| t.text).collect::<Vec<_>>());
                        }
                        "property" => p.skip_until_semicolon()?,
                        other => return Err(p.err_at(Some(&kw), format!("unexpected `{other}` in variable block"))),
                    }
                }
                p.expect("}")?;
                let levels = levels.ok_or_else(|| p.err_at(Some(&vname), "variable has no type declaration"))?;
                if variables.iter().any(|v| v.name() == vname.text) {
                    return Err(p.err_at(Some(&vname), format!("variable `{}` declared twice", vname.text)));
                }
                let v = Variable::new(vname.text.clone(), levels)
                    .map_err(|e| p.err_at(Some(&vname), e.to_string()))?;
                variables.push(v);
            }
            "probability" => {
                let at = p.next()?;
                p.expect("(")?;
                let child = p.word()?;
                let mut parents = Vec::new();
                if p.at("|") {
                    p.next()?;
                    parents = p.word_list(")")?;
                }
                p.expect(")")?;
                p.expect("{")?;
                let mut block = RawBlock { at, child, parents, rows: Vec::new(), table: None };
                while !p.at("}") {
                    let head = p.peek().cloned().ok_or_else(|| p.err_at(None, "unexpected end of input"))?;
                    match head.text.as_str() {
                        "table" => {
                            p.next()?;
                            block.table = Some((p.numbers_until_semicolon()?, head));
                        }
                        "default" => {
                            p.next()?;
                            block.rows.push((None, p.numbers_until_semicolon()?, head));
                        }
                        "property" => p.skip_until_semicolon()?,
                        "(" => {
                            p.next()?;
                            let lv = p.word_list(")")?;
                            p.expect(")")?;
                            block.rows.push((Some(lv), p.numbers_until_semicolon()?, head));
                        }
                        other => {
                            return Err(p.err_at(Some(&head), format!("unexpected `{other}` in probability block")))
                        }
                    }
                }
                p.expect("}")?;
                blocks.push(block);
            }
            other => return Err(p.err_at(Some(&t), format!("unexpected `{other}` at top level"))),
        }
    }

    let mut cpts: Vec<Cpt<f64>> = Vec::new();
    for b in blocks {
        cpts.push(build_cpt(&p, &variables, b, &cpts)?);
    }
    BayesianNetwork::new(name, variables, cpts)
}

fn lookup<'a>(p: &Parser, vars: &'a [Variable], t: &Token) -> Result<&'a Variable> {
    vars.iter()
        .find(|v| v.name() == t.text)
        .ok_or_else(|| p.err_at(Some(t), format!("undeclared variable `{}`", t.text)))
}

fn check_row(p: &Parser, row: &mut [f64], at: &Token) -> Result<()> {
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(p.err_at(Some(at), format!("row sums to {s}, not 1")));
    }
    row.iter_mut().for_each(|v| *v /= s);
    Ok(())
}

fn build_cpt(p: &Parser, vars: &[Variable], b: RawBlock, done: &[Cpt<f64>]) -> Result<Cpt<f64>> {
    let child = lookup(p, vars, &b.child)?.clone();
    if done.iter().any(|c| c.child().name() == child.name()) {
        return Err(p.err_at(Some(&b.at), format!("duplicate probability block for `{}`", child.name())));
    }
    let parents: Vec<Variable> = b.parents.iter().map(|t| lookup(p, vars, t).cloned()).collect::<Result<_>>()?;
    let k = child.cardinality();
    let ncols: usize = parents.iter().map(Variable::cardinality).product();
    let mut family = vec![child.clone()];
    family.extend(parents.iter().cloned());
    let mut values: Vec<Option<f64>> = vec![None; k * ncols];

    if let Some((table, at)) = &b.table {
        if table.len() != k * ncols {
            return Err(p.err_at(Some(at), format!("table has {} entries, expected {}", table.len(), k * ncols)));
        }
        for col in 0..ncols {
            let mut row = table[col * k..(col + 1) * k].to_vec();
            check_row(p, &mut row, at)?;
            for (i, v) in row.into_iter().enumerate() {
                values[col * k + i] = Some(v);
            }
        }
    }
    let mut default = None;
    for (levels, mut row, at) in b.rows {
        if row.len() != k {
            return Err(p.err_at(Some(&at), format!("row has {} entries, `{}` has {k} levels", row.len(), child.name())));
        }
        check_row(p, &mut row, &at)?;
        let Some(levels) = levels else {
            default = Some(row);
            continue;
        };
        if levels.len() != parents.len() {
            return Err(p.err_at(Some(&at), format!("row names {} parent levels, expected {}", levels.len(), parents.len())));
        }
        let mut col = 0;
        let mut stride = 1;
        for (t, par) in levels.iter().zip(&parents) {
            let l = par
                .level_index(&t.text)
                .ok_or_else(|| p.err_at(Some(t), format!("`{}` is not a level of `{}`", t.text, par.name())))?;
            col += l * stride;
            stride *= par.cardinality();
        }
        if values[col * k].is_some() {
            return Err(p.err_at(Some(&at), "parent configuration given twice"));
        }
        for (i, v) in row.into_iter().enumerate() {
            values[col * k + i] = Some(v);
        }
    }
    let mut dense = Vec::with_capacity(values.len());
    for (i, v) in values.into_iter().enumerate() {
        match (v, &default) {
            (Some(v), _) => dense.push(v),
            (None, Some(d)) => dense.push(d[i % k]),
            (None, None) => {
                return Err(p.err_at(Some(&b.at), format!("missing probabilities for `{}`", child.name())))
            }
        }
    }
    let table = Potential::dense(family, dense)?;
    Cpt::new(table, ROW_SUM_TOLERANCE)
}

/// Writes a network in the entry-list style; values are printed with full
/// round-trip precision.
pub fn write_network(bn: &BayesianNetwork<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "network {} {{\n}}", bn.name());
    for v in bn.variables() {
        let _ = writeln!(
            s,
            "variable {} {{\n  type discrete [ {} ] {{ {} }};\n}}",
            v.name(),
            v.cardinality(),
            v.levels().join(", ")
        );
    }
    for cpt in bn.cpts() {
        let child = cpt.child();
        let parents = cpt.parents();
        if parents.is_empty() {
            let _ = writeln!(s, "probability ( {} ) {{\n  table {};\n}}", child.name(), fmt_row(&cpt.column(&[])));
            continue;
        }
        let pnames: Vec<&str> = parents.iter().map(Variable::name).collect();
        let _ = writeln!(s, "probability ( {} | {} ) {{", child.name(), pnames.join(", "));
        let cards: Vec<usize> = parents.iter().map(Variable::cardinality).collect();
        let mut cell = vec![0usize; parents.len()];
        let ncols: usize = cards.iter().product();
        for _ in 0..ncols {
            let labels: Vec<&str> = cell.iter().zip(parents).map(|(&l, v)| v.levels()[l].as_str()).collect();
            let _ = writeln!(s, "  ({}) {};", labels.join(", "), fmt_row(&cpt.column(&cell)));
            for (c, &n) in cell.iter_mut().zip(&cards) {
                *c += 1;
                if *c < n {
                    break;
                }
                *c = 0;
            }
        }
        let _ = writeln!(s, "}}");
    }
    s
}

fn fmt_row(row: &[f64]) -> String {
    row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
}

/// Parses a DAG file: one `parent -> child` edge or one bare node name per
/// line, `#` starts a comment. Nodes are ordered by first appearance.
pub fn parse_dag(text: &str) -> Result<crate::graph::Dag> {
    let mut nodes: Vec<String> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let touch = |n: &str, nodes: &mut Vec<String>| {
        if !nodes.iter().any(|m| m == n) {
            nodes.push(n.to_string());
        }
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |m: &str| Error::Parse { line: i + 1, column: 1, message: m.to_string() };
        match line.split_once("->") {
            Some((a, b)) => {
                let (a, b) = (a.trim(), b.trim());
                if a.is_empty() || b.is_empty() || a.contains(char::is_whitespace) || b.contains(char::is_whitespace) {
                    return Err(bad("expected `parent -> child`"));
                }
                touch(a, &mut nodes);
                touch(b, &mut nodes);
                edges.push((a.to_string(), b.to_string()));
            }
            None if !line.contains(char::is_whitespace) => touch(line, &mut nodes),
            None => return Err(bad("expected a node name or `parent -> child`")),
        }
    }
    crate::graph::Dag::new(&nodes, &edges)
}

/// Writes a DAG in the format read by [`parse_dag`].
pub fn write_dag(dag: &crate::graph::Dag) -> String {
    let mut s = String::new();
    for n in dag.nodes() {
        let _ = writeln!(s, "{n}");
    }
    for (p, c) in dag.edges() {
        let _ = writeln!(s, "{} -> {}", dag.nodes()[p], dag.nodes()[c]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "
network tiny { property author x; }
/* two nodes */
variable rain { type discrete [ 2 ] { yes, no }; }
variable wet { type discrete [ 2 ] { yes, no }; property k v; }
probability ( rain ) { table 0.2, 0.8; } // prior
probability ( wet | rain ) {
  (yes) 0.9, 0.1;
  (no) 0.1, 0.9;
}
";

    #[test]
    fn parses_entry_rows() {
        let bn = parse_network(SMALL).unwrap();
        assert_eq!(bn.name(), "tiny");
        assert_eq!(bn.cpt("wet").unwrap().column(&[1]), vec![0.1, 0.9]);
        assert_eq!(bn.dag().parents("wet").unwrap(), vec!["rain"]);
    }

    #[test]
    fn table_form_is_child_fastest() {
        let text = "variable a { type discrete [2] {x, y}; }
variable b { type discrete [3] {p, q, r}; }
probability (a) { table 0.5, 0.5; }
probability (b | a) { table 0.2, 0.3, 0.5, 0.1, 0.1, 0.8; }";
        let bn = parse_network(text).unwrap();
        assert_eq!(bn.cpt("b").unwrap().column(&[1]), vec![0.1, 0.1, 0.8]);
    }

    #[test]
    fn default_row_fills_gaps() {
        let text = "variable a { type discrete [2] {x, y}; }
variable b { type discrete [2] {p, q}; }
probability (a) { table 1, 0; }
probability (b | a) { (y) 0.3, 0.7; default 0.5, 0.5; }";
        let bn = parse_network(text).unwrap();
        assert_eq!(bn.cpt("b").unwrap().column(&[0]), vec![0.5, 0.5]);
        assert_eq!(bn.cpt("b").unwrap().column(&[1]), vec![0.3, 0.7]);
    }

    #[test]
    fn single_variable() {
        let bn = parse_network("variable a { type discrete [1] {only}; } probability (a) { table 1.0; }").unwrap();
        assert_eq!(bn.len(), 1);
    }

    #[test]
    fn malformed_row_reports_location() {
        let text = "variable a { type discrete [2] {x, y}; }\nprobability (a) {\n  table 0.2, 0.3, 0.5;\n}";
        match parse_network(text) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_sums_duplicates_and_unknowns() {
        let head = "variable a { type discrete [2] {x, y}; }\n";
        assert!(parse_network(&format!("{head}probability (a) {{ table 0.2, 0.7; }}")).is_err());
        assert!(parse_network(&format!("{head}probability (a) {{ table 0.5, 0.5; }} probability (a) {{ table 0.5, 0.5; }}"))
            .is_err());
        assert!(parse_network(&format!("{head}probability (z) {{ table 0.5, 0.5; }}")).is_err());
        assert!(parse_network(&format!("{head}probability (a) {{ table 0.5, 0.5; ")).is_err());
    }

    #[test]
    fn rounding_is_renormalized() {
        let bn = parse_network("variable a { type discrete [3] {x,y,z}; } probability (a) { table 0.3333333, 0.3333333, 0.3333333; }")
            .unwrap();
        let s: f64 = bn.cpt("a").unwrap().column(&[]).iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn write_then_parse_roundtrips() {
        let bn = parse_network(SMALL).unwrap();
        assert_eq!(parse_network(&write_network(&bn)).unwrap(), bn);
    }

    #[test]
    fn dag_file() {
        let dag = parse_dag("# header\na -> b\nb -> c # tail\nlonely\n").unwrap();
        assert_eq!(dag.nodes(), ["a", "b", "c", "lonely"]);
        assert_eq!(parse_dag(&write_dag(&dag)).unwrap().edges(), dag.edges());
        assert!(parse_dag("a -> \n").is_err());
        assert!(parse_dag("a -> b\nb -> a\n").is_err());
    }
}
