//! Frozen DOT and JSON renderings of the corpus traces. Set
//! `UPDATE_GOLDEN=1` to rewrite them after an intended change.

mod common;

use vartrace_core::export::{from_json, to_dot, to_json};
use vartrace_core::varinterp::run_variational;

#[test]
fn corpus_goldens_are_stable() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let dir = common::golden_dir();
    for (name, p) in common::corpus() {
        let t = run_variational(&p).unwrap().trace;
        let dot = to_dot(&t);
        let json = to_json(&t) + "\n";
        assert_eq!(from_json(&json).unwrap(), t, "{name}: JSON round trip");
        let dot_path = dir.join(format!("{name}.dot"));
        let json_path = dir.join(format!("{name}.json"));
        if update {
            std::fs::write(&dot_path, &dot).unwrap();
            std::fs::write(&json_path, &json).unwrap();
            continue;
        }
        let want_dot = std::fs::read_to_string(&dot_path).unwrap_or_else(|_| panic!("missing {dot_path:?}"));
        let want_json = std::fs::read_to_string(&json_path).unwrap_or_else(|_| panic!("missing {json_path:?}"));
        assert_eq!(dot, want_dot, "{name}.dot");
        assert_eq!(json, want_json, "{name}.json");
    }
}

/// Tokenizer and recursive-descent checker for the DOT subset the exporter
/// writes: attribute statements, nodes, edges and nested subgraphs.
mod dot {
    use std::collections::HashSet;

    #[derive(Debug, PartialEq, Clone)]
    enum Tok {
        Id(String),
        Str(String),
        Sym(&'static str),
    }

    fn lex(s: &str) -> Result<Vec<Tok>, String> {
        let cs: Vec<char> = s.chars().collect();
        let mut i = 0;
        let mut out = Vec::new();
        while i < cs.len() {
            let c = cs[i];
            if c.is_whitespace() {
                i += 1;
            } else if c == '"' {
                let mut text = String::new();
                i += 1;
                loop {
                    match cs.get(i) {
                        None => return Err("unterminated string".into()),
                        Some('"') => break,
                        Some('\\') => {
                            text.push(*cs.get(i + 1).ok_or("dangling escape")?);
                            i += 2;
                        }
                        Some(&ch) => {
                            if ch == '\n' {
                                return Err("raw newline in string".into());
                            }
                            text.push(ch);
                            i += 1;
                        }
                    }
                }
                i += 1;
                out.push(Tok::Str(text));
            } else if c.is_alphanumeric() || c == '_' {
                let start = i;
                while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Id(cs[start..i].iter().collect()));
            } else if c == '-' && cs.get(i + 1) == Some(&'>') {
                out.push(Tok::Sym("->"));
                i += 2;
            } else {
                let sym = match c {
                    '{' => "{",
                    '}' => "}",
                    '[' => "[",
                    ']' => "]",
                    '=' => "=",
                    ';' => ";",
                    ',' => ",",
                    _ => return Err(format!("unexpected {c:?}")),
                };
                out.push(Tok::Sym(sym));
                i += 1;
            }
        }
        Ok(out)
    }

    struct P {
        toks: Vec<Tok>,
        pos: usize,
        nodes: HashSet<String>,
        edges: Vec<(String, String)>,
    }

    impl P {
        fn peek(&self) -> Option<&Tok> {
            self.toks.get(self.pos)
        }
        fn next(&mut self) -> Result<Tok, String> {
            let t = self.toks.get(self.pos).cloned().ok_or("unexpected end")?;
            self.pos += 1;
            Ok(t)
        }
        fn sym(&mut self, s: &'static str) -> Result<(), String> {
            match self.next()? {
                Tok::Sym(x) if x == s => Ok(()),
                t => Err(format!("expected {s}, found {t:?}")),
            }
        }
        fn id(&mut self) -> Result<String, String> {
            match self.next()? {
                Tok::Id(x) | Tok::Str(x) => Ok(x),
                t => Err(format!("expected identifier, found {t:?}")),
            }
        }
        fn attrs(&mut self) -> Result<(), String> {
            self.sym("[")?;
            loop {
                self.id()?;
                self.sym("=")?;
                self.id()?;
                match self.next()? {
                    Tok::Sym(",") => continue,
                    Tok::Sym("]") => return Ok(()),
                    t => return Err(format!("bad attribute list at {t:?}")),
                }
            }
        }
        fn stmts(&mut self) -> Result<(), String> {
            loop {
                match self.peek().ok_or("missing }")? {
                    Tok::Sym("}") => {
                        self.pos += 1;
                        return Ok(());
                    }
                    Tok::Id(k) if k == "subgraph" => {
                        self.pos += 1;
                        self.id()?;
                        self.sym("{")?;
                        self.stmts()?;
                    }
                    Tok::Id(k) if k == "node" || k == "edge" => {
                        self.pos += 1;
                        self.attrs()?;
                        self.sym(";")?;
                    }
                    _ => {
                        let a = self.id()?;
                        match self.next()? {
                            Tok::Sym("=") => {
                                self.id()?;
                            }
                            Tok::Sym("->") => {
                                let b = self.id()?;
                                self.edges.push((a, b));
                                if self.peek() == Some(&Tok::Sym("[")) {
                                    self.attrs()?;
                                }
                            }
                            Tok::Sym("[") => {
                                self.pos -= 1;
                                self.attrs()?;
                                self.nodes.insert(a);
                            }
                            t => return Err(format!("unexpected {t:?}")),
                        }
                        self.sym(";")?;
                    }
                }
            }
        }
    }

    /// Returns the number of node statements.
    pub fn check(text: &str) -> Result<usize, String> {
        let mut p = P {
            toks: lex(text)?,
            pos: 0,
            nodes: HashSet::new(),
            edges: Vec::new(),
        };
        if p.id()? != "digraph" {
            return Err("not a digraph".into());
        }
        p.id()?;
        p.sym("{")?;
        p.stmts()?;
        if p.pos != p.toks.len() {
            return Err("trailing tokens".into());
        }
        for (a, b) in &p.edges {
            if !p.nodes.contains(a) || !p.nodes.contains(b) {
                return Err(format!("edge {a} -> {b} to an undeclared node"));
            }
        }
        Ok(p.nodes.len())
    }
}

#[test]
fn exported_dot_is_well_formed() {
    use vartrace_core::tracegraph::{NodeKind, VariationalTrace};
    use vartrace_core::varcore::OptionSet;
    assert_eq!(dot::check(&to_dot(&VariationalTrace::empty(&OptionSet::empty()))), Ok(0));
    for (name, p) in common::corpus() {
        let t = run_variational(&p).unwrap().trace;
        let boxes = t.nodes().iter().filter(|n| n.kind() == NodeKind::MethodBox).count();
        assert_eq!(dot::check(&to_dot(&t)), Ok(t.len() - boxes), "{name}");
    }
    assert!(dot::check("digraph g { a -> b; }").is_err());
    assert!(dot::check("digraph g { a [label=\"x\"]; ").is_err());
}
