//! Text formats.
//!
//! Newick: rooted at the internal vertex next to leaf 1, children ordered by
//! smallest leaf label, internal vertices unlabelled, e.g. `(1,2,(3,4));`.
//! The parser also accepts a root with two children (`((1,2),(3,4));`), which
//! it suppresses. Internal ids are assigned afresh.
//!
//! JSON: `{"n_leaves": N, "edges": [[a, b], ...]}`.

use serde::{Deserialize, Serialize};

use super::{Cladogram, Topology, Vertex};
use crate::{Error, Result};

pub fn to_newick(t: &Cladogram) -> String {
    let root = t.neighbors(1)[0] as usize;
    // smallest leaf label in each subtree hanging off `root`
    let mut out = String::new();
    write_subtree(t, root, 0, &mut out);
    out.push(';');
    out
}

fn min_leaf(t: &Cladogram, v: Vertex, from: Vertex) -> usize {
    if t.is_leaf(v) {
        return v;
    }
    t.neighbors(v)
        .iter()
        .map(|&w| w as usize)
        .filter(|&w| w != from)
        .map(|w| min_leaf(t, w, v))
        .min()
        .unwrap()
}

fn write_subtree(t: &Cladogram, v: Vertex, from: Vertex, out: &mut String) {
    if t.is_leaf(v) {
        out.push_str(&v.to_string());
        return;
    }
    let mut kids: Vec<(usize, Vertex)> = t
        .neighbors(v)
        .iter()
        .map(|&w| w as usize)
        .filter(|&w| w != from)
        .map(|w| (min_leaf(t, w, v), w))
        .collect();
    kids.sort_unstable();
    out.push('(');
    for (i, (_, w)) in kids.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_subtree(t, *w, v, out);
    }
    out.push(')');
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> Error {
        let before = &self.src[..self.pos.min(self.src.len())];
        let line = before.iter().filter(|&&c| c == b'\n').count() + 1;
        let column = before.iter().rev().take_while(|&&c| c != b'\n').count() + 1;
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => Err(self.error(format!("expected '{}', found '{}'", c as char, x as char))),
            None => Err(self.error(format!("expected '{}', found end of input", c as char))),
        }
    }

    /// Returns the node index of the parsed subtree.
    fn subtree(&mut self, nodes: &mut Vec<Node>) -> Result<usize> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let mut kids = vec![self.subtree(nodes)?];
                while self.peek() == Some(b',') {
                    self.pos += 1;
                    kids.push(self.subtree(nodes)?);
                }
                self.expect(b')')?;
                nodes.push(Node::Internal(kids));
                Ok(nodes.len() - 1)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let label: usize = text
                    .parse()
                    .map_err(|_| self.error("leaf label too large"))?;
                if label == 0 {
                    self.pos = start;
                    return Err(self.error("leaf labels start at 1"));
                }
                nodes.push(Node::Leaf(label));
                Ok(nodes.len() - 1)
            }
            Some(c) => Err(self.error(format!("unexpected '{}'", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

enum Node {
    Leaf(usize),
    Internal(Vec<usize>),
}

pub fn parse_newick(text: &str) -> Result<Cladogram> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let mut nodes = vec![];
    let root = p.subtree(&mut nodes)?;
    p.expect(b';')?;
    if p.peek().is_some() {
        return Err(p.error("trailing input after ';'"));
    }
    let n = nodes.iter().filter(|x| matches!(x, Node::Leaf(_))).count();
    if n < 3 {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("{n} leaves; need at least 3"),
        });
    }
    let mut ids = vec![0usize; nodes.len()];
    let mut next = n + 1;
    for (i, node) in nodes.iter().enumerate() {
        ids[i] = match node {
            Node::Leaf(l) => *l,
            Node::Internal(_) => {
                next += 1;
                next - 1
            }
        };
    }
    let mut edges = vec![];
    let syntax = |m: String| Error::Parse {
        line: 1,
        column: 1,
        message: m,
    };
    for (i, node) in nodes.iter().enumerate() {
        if let Node::Internal(kids) = node {
            let want = if i == root {
                [2usize, 3].contains(&kids.len())
            } else {
                kids.len() == 2
            };
            if !want {
                return Err(syntax(format!(
                    "internal node with {} children",
                    kids.len()
                )));
            }
            if i == root && kids.len() == 2 {
                continue;
            }
            for &k in kids {
                edges.push((ids[i], ids[k]));
            }
        }
    }
    if let Node::Internal(kids) = &nodes[root] {
        if kids.len() == 2 {
            // suppress the degree-2 root and close the gap in internal ids
            edges.push((ids[kids[0]], ids[kids[1]]));
            let gone = ids[root];
            for e in edges.iter_mut() {
                for v in [&mut e.0, &mut e.1] {
                    if *v > gone {
                        *v -= 1;
                    }
                }
            }
        }
    } else {
        return Err(syntax("a single leaf is not a cladogram".into()));
    }
    Cladogram::new(n, &edges).map_err(|e| syntax(e.to_string()))
}

#[derive(Serialize, Deserialize)]
struct EdgeList {
    n_leaves: usize,
    edges: Vec<[usize; 2]>,
}

pub fn to_json(t: &Cladogram) -> String {
    let e = EdgeList {
        n_leaves: t.n(),
        edges: t.edges().map(|(a, b)| [a, b]).collect(),
    };
    serde_json::to_string(&e).expect("serialise")
}

pub fn parse_json(text: &str) -> Result<Cladogram> {
    let e: EdgeList = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let edges: Vec<(Vertex, Vertex)> = e.edges.iter().map(|&[a, b]| (a, b)).collect();
    Cladogram::new(e.n_leaves, &edges)
}

/// Either format, chosen by the first non-blank character.
pub fn parse(text: &str) -> Result<Cladogram> {
    match text.trim_start().as_bytes().first() {
        Some(b'{') => parse_json(text),
        _ => parse_newick(text),
    }
}

impl Serialize for Cladogram {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EdgeList {
            n_leaves: self.n(),
            edges: self.edges().map(|(a, b)| [a, b]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cladogram {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let e = EdgeList::deserialize(d)?;
        let edges: Vec<(Vertex, Vertex)> = e.edges.iter().map(|&[a, b]| (a, b)).collect();
        Cladogram::new(e.n_leaves, &edges).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;
    use crate::tree::{uniform_cladogram, validate_cladogram};

    #[test]
    fn star_round_trip() {
        let s = Cladogram::star();
        assert_eq!(to_newick(&s), "(1,2,3);");
        assert_eq!(
            parse_newick("(1,2,3);").unwrap().full_shape(),
            s.full_shape()
        );
    }

    #[test]
    fn cherry_forms_agree() {
        let t = validate_cladogram(4, &[(1, 5), (2, 5), (5, 6), (3, 6), (4, 6)]).unwrap();
        assert_eq!(to_newick(&t), "(1,2,(3,4));");
        let a = parse_newick("((1,2),(3,4));").unwrap();
        let b = parse_newick(" ( 1 , 2 ,\n(3,4) ) ; ").unwrap();
        assert_eq!(a.full_shape(), t.full_shape());
        assert_eq!(b.full_shape(), t.full_shape());
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "(1,2",
            "(1,2,3)",
            "(1,2,3);x",
            "(1,(2,3,4),5);",
            "(1,2);",
            "(0,1,2);",
            "(1,1,2);",
        ] {
            assert!(
                matches!(parse_newick(bad), Err(Error::Parse { .. })),
                "{bad}"
            );
        }
        match parse_newick("(1,\n2,x);") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn random_round_trips() {
        let mut rng = replicate_rng(3, 0);
        for n in 3..40 {
            let t = uniform_cladogram(n, &mut rng).unwrap();
            let a = parse(&to_newick(&t)).unwrap();
            assert_eq!(a.full_shape(), t.full_shape());
            let b = parse(&to_json(&t)).unwrap();
            assert_eq!(b, t);
            let c: Cladogram = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
            assert_eq!(c, t);
        }
    }

    #[test]
    fn json_errors_have_positions() {
        assert!(matches!(
            parse_json("{\"n_leaves\": 3,\n \"edges\": [[1,4],"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_json("{\"n_leaves\": 3, \"edges\": [[1,4],[2,4]]}"),
            Err(Error::WrongEdgeCount { .. })
        ));
    }
}
