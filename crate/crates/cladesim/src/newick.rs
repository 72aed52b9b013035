//! Newick export and import with bracketed metadata.
//!
//! A complete tree is written as a binary tree: every birth splits the
//! parent's lineage into the parent's continuation (left) and the newborn
//! species (right), so later-born species sit further right, as in the
//! planar order. Every species ends in a tip, extinct species included.
//! Tips carry `[&status=extant|extinct,birth=..,death=..]` with times
//! before the present, internal nodes carry `[&time=..]`, and the root also
//! carries `tree=complete|lineage` and `origin=..`. Branch lengths are
//! durations, so the lengths from the root down to an extant tip sum to the
//! origin time.
//!
//! Both walkers are iterative: complete trees can be tens of thousands of
//! levels deep.

use std::fmt::Write as _;

use cladesim_core::{CompleteTree, LineagePointProcess, Species};
use thiserror::Error;

/// Times are written with this many significant digits.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NewickMode {
    /// Every species, extinct ones included.
    Complete,
    /// The ultrametric tree on the extant species only.
    LineageOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewickOptions {
    pub mode: NewickMode,
    /// Model time is divided by this factor on output and multiplied by it
    /// on input.
    pub rate_scale: f64,
}

impl Default for NewickOptions {
    fn default() -> Self {
        Self {
            mode: NewickMode::Complete,
            rate_scale: 1.0,
        }
    }
}

/// One Newick tree, terminated by `;`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewickDocument {
    text: String,
}

impl NewickDocument {
    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

impl std::fmt::Display for NewickDocument {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NewickError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: negative branch length {value}")]
    NegativeLength { line: usize, column: usize, value: f64 },
    #[error("line {line}, column {column}: tip height {height} differs from {expected}; lineage trees must be ultrametric")]
    NotUltrametric {
        line: usize,
        column: usize,
        height: f64,
        expected: f64,
    },
    #[error("line {line}, column {column}: {reason}")]
    InvalidTree {
        reason: cladesim_core::Error,
        line: usize,
        column: usize,
    },
}

/// Rounds to [`SIGNIFICANT_DIGITS`] and prints the shortest text that
/// reads back to the rounded value.
pub fn format_time(x: f64) -> String {
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    let s = format!("{rounded:?}");
    s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
}

pub fn export_newick(tree: &CompleteTree, options: &NewickOptions) -> NewickDocument {
    match options.mode {
        NewickMode::Complete => export_complete(tree, options.rate_scale),
        NewickMode::LineageOnly => {
            let marks = cladesim_core::extract_lineage_tree(tree).expect("tree has extant species");
            export_lineage(&marks, tree.origin(), options.rate_scale)
        }
    }
}

enum Task {
    Segment { species: usize, k: usize, from: f64 },
    Comma,
    Close { length: f64, height: f64, root: bool },
}

fn export_complete(tree: &CompleteTree, scale: f64) -> NewickDocument {
    let species = tree.species();
    let origin = tree.origin();
    // depth-first order lists children latest-born first
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); species.len()];
    for (i, sp) in species.iter().enumerate().skip(1) {
        kids[sp.parent.expect("validated")].push(i);
    }
    for k in &mut kids {
        k.reverse();
    }
    let t = |x: f64| format_time(x / scale);
    let root_meta = format!("tree=complete,origin={}", t(origin));
    let mut out = String::new();
    let mut stack = vec![Task::Segment {
        species: 0,
        k: 0,
        from: 0.0,
    }];
    while let Some(task) = stack.pop() {
        match task {
            Task::Segment { species: i, k, from } => {
                let is_root = i == 0 && k == 0;
                if k == kids[i].len() {
                    let sp = species[i];
                    let status = if sp.extant { "extant" } else { "extinct" };
                    let _ = write!(
                        out,
                        "S{i}[&status={status},birth={},death={}",
                        t(origin - sp.birth),
                        t(origin - sp.death)
                    );
                    if is_root {
                        let _ = write!(out, ",{root_meta}");
                    }
                    let _ = write!(out, "]:{}", t(sp.death - from));
                } else {
                    let c = kids[i][k];
                    let b = species[c].birth;
                    out.push('(');
                    stack.push(Task::Close {
                        length: b - from,
                        height: b,
                        root: is_root,
                    });
                    stack.push(Task::Segment {
                        species: c,
                        k: 0,
                        from: b,
                    });
                    stack.push(Task::Comma);
                    stack.push(Task::Segment {
                        species: i,
                        k: k + 1,
                        from: b,
                    });
                }
            }
            Task::Comma => out.push(','),
            Task::Close { length, height, root } => {
                let _ = write!(out, ")[&time={}", t(origin - height));
                if root {
                    let _ = write!(out, ",{root_meta}");
                }
                let _ = write!(out, "]:{}", t(length));
            }
        }
    }
    out.push(';');
    NewickDocument { text: out }
}

/// Writes the lineage tree with tips `L1..Ln` in planar order.
pub fn export_lineage(marks: &LineagePointProcess, origin: f64, scale: f64) -> NewickDocument {
    let d = marks.depths();
    let n = marks.n();
    let t = |x: f64| format_time(x / scale);
    let root_meta = format!("tree=lineage,origin={}", t(origin));
    if n == 1 {
        return NewickDocument {
            text: format!("L1[&status=extant,{root_meta}]:{};", t(origin)),
        };
    }
    // max-Cartesian tree over the depths: internal node j joins tips ..=j
    // and j+1..; None marks a tip
    let mut left: Vec<Option<usize>> = vec![None; d.len()];
    let mut right: Vec<Option<usize>> = vec![None; d.len()];
    let mut spine: Vec<usize> = Vec::new();
    for j in 0..d.len() {
        let mut last = None;
        while spine.last().is_some_and(|&top| d[top] < d[j]) {
            last = spine.pop();
        }
        left[j] = last;
        if let Some(&top) = spine.last() {
            right[top] = Some(j);
        }
        spine.push(j);
    }
    let root = spine[0];

    enum Item {
        Node { j: usize, parent_depth: f64 },
        Tip { i: usize, parent_depth: f64 },
        Comma,
        Close { j: usize, parent_depth: f64 },
    }
    let mut out = String::new();
    let mut stack = vec![Item::Node {
        j: root,
        parent_depth: origin,
    }];
    while let Some(item) = stack.pop() {
        match item {
            Item::Node { j, parent_depth } => {
                out.push('(');
                stack.push(Item::Close { j, parent_depth });
                stack.push(match right[j] {
                    Some(r) => Item::Node { j: r, parent_depth: d[j] },
                    None => Item::Tip { i: j + 1, parent_depth: d[j] },
                });
                stack.push(Item::Comma);
                stack.push(match left[j] {
                    Some(l) => Item::Node { j: l, parent_depth: d[j] },
                    None => Item::Tip { i: j, parent_depth: d[j] },
                });
            }
            Item::Tip { i, parent_depth } => {
                let _ = write!(out, "L{}[&status=extant]:{}", i + 1, t(parent_depth));
            }
            Item::Comma => out.push(','),
            Item::Close { j, parent_depth } => {
                let _ = write!(out, ")[&time={}", t(d[j]));
                if j == root {
                    let _ = write!(out, ",{root_meta}");
                }
                let _ = write!(out, "]:{}", t(parent_depth - d[j]));
            }
        }
    }
    out.push(';');
    NewickDocument { text: out }
}

/// A tree read back from Newick.
#[derive(Clone, Debug, PartialEq)]
pub enum ImportedTree {
    Complete(CompleteTree),
    Lineage { origin: f64, marks: LineagePointProcess },
}

#[derive(Clone, Debug, Default)]
struct RawNode {
    children: Vec<usize>,
    length: Option<f64>,
    meta: Vec<(String, String)>,
    line: usize,
    column: usize,
}

impl RawNode {
    fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

struct RawTree {
    nodes: Vec<RawNode>,
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Open,
    Close,
    Comma,
    Colon,
    Semicolon,
    Comment(String),
    Word(String),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> NewickError {
        NewickError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    /// Next token with the position of its first character.
    fn next(&mut self) -> Result<Option<(Token, usize, usize)>, NewickError> {
        while self.chars.peek().is_some_and(|c| c.is_whitespace()) {
            self.bump();
        }
        let (line, column) = (self.line, self.column);
        let Some(c) = self.bump() else {
            return Ok(None);
        };
        let token = match c {
            '(' => Token::Open,
            ')' => Token::Close,
            ',' => Token::Comma,
            ':' => Token::Colon,
            ';' => Token::Semicolon,
            '[' => {
                let mut body = String::new();
                loop {
                    match self.bump() {
                        Some(']') => break,
                        Some(c) => body.push(c),
                        None => return Err(self.error(line, column, "unterminated comment")),
                    }
                }
                Token::Comment(body)
            }
            '\'' => {
                let mut body = String::new();
                loop {
                    match self.bump() {
                        Some('\'') if self.chars.peek() == Some(&'\'') => {
                            self.bump();
                            body.push('\'');
                        }
                        Some('\'') => break,
                        Some(c) => body.push(c),
                        None => return Err(self.error(line, column, "unterminated quoted label")),
                    }
                }
                Token::Word(body)
            }
            ']' => return Err(self.error(line, column, "unexpected `]`")),
            c => {
                let mut body = String::from(c);
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || "()[],:;'".contains(c) {
                        break;
                    }
                    body.push(c);
                    self.bump();
                }
                Token::Word(body)
            }
        };
        Ok(Some((token, line, column)))
    }
}

fn parse_meta(body: &str, node: &mut RawNode) {
    let Some(body) = body.strip_prefix('&') else {
        return;
    };
    for pair in body.split(',') {
        if let Some((k, v)) = pair.split_once('=') {
            node.meta.push((k.trim().to_owned(), v.trim().to_owned()));
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(Token, usize, usize)>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<Option<&(Token, usize, usize)>, NewickError> {
        if self.peeked.is_none() {
            self.peeked = self.lexer.next()?;
        }
        Ok(self.peeked.as_ref())
    }

    fn take(&mut self) -> Result<Option<(Token, usize, usize)>, NewickError> {
        self.peek()?;
        Ok(self.peeked.take())
    }

    fn skip_whitespace_only(&mut self) -> Result<bool, NewickError> {
        Ok(self.peek()?.is_none())
    }

    /// Label, comments and branch length after a node.
    fn tail(&mut self, node: &mut RawNode) -> Result<(), NewickError> {
        let mut seen_label = false;
        loop {
            let Some((token, line, column)) = self.peek()?.cloned() else {
                return Ok(());
            };
            match token {
                Token::Word(_) if !seen_label && node.length.is_none() => {
                    seen_label = true;
                    self.take()?;
                }
                Token::Comment(body) => {
                    parse_meta(&body, node);
                    self.take()?;
                }
                Token::Colon if node.length.is_none() => {
                    self.take()?;
                    match self.take()? {
                        Some((Token::Word(w), l, c)) => {
                            let value: f64 = w.parse().map_err(|_| NewickError::Syntax {
                                line: l,
                                column: c,
                                message: format!("`{w}` is not a branch length"),
                            })?;
                            if !value.is_finite() {
                                return Err(self.lexer.error(l, c, "branch length must be finite"));
                            }
                            if value < 0.0 {
                                return Err(NewickError::NegativeLength {
                                    line: l,
                                    column: c,
                                    value,
                                });
                            }
                            node.length = Some(value);
                        }
                        _ => return Err(self.lexer.error(line, column, "expected a branch length after `:`")),
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    /// Parses one tree; returns `None` at the end of input.
    fn tree(&mut self) -> Result<Option<RawTree>, NewickError> {
        if self.skip_whitespace_only()? {
            return Ok(None);
        }
        let mut nodes: Vec<RawNode> = Vec::new();
        let mut open: Vec<usize> = Vec::new();
        loop {
            // a subtree starts here
            let (token, line, column) = self.take()?.ok_or_else(|| {
                self.lexer
                    .error(self.lexer.line, self.lexer.column, "unexpected end of input")
            })?;
            let idx = nodes.len();
            nodes.push(RawNode {
                line,
                column,
                ..RawNode::default()
            });
            if let Some(&p) = open.last() {
                nodes[p].children.push(idx);
            }
            match token {
                Token::Open => {
                    open.push(idx);
                    continue;
                }
                Token::Word(_) | Token::Comment(_) | Token::Colon => {
                    self.peeked = Some((token, line, column));
                    let mut node = std::mem::take(&mut nodes[idx]);
                    self.tail(&mut node)?;
                    nodes[idx] = node;
                }
                Token::Comma | Token::Close | Token::Semicolon => {
                    // empty leaf
                    self.peeked = Some((token, line, column));
                }
            }
            // after a subtree: close groups until a comma or the end
            loop {
                match self.take()? {
                    Some((Token::Comma, line, column)) => {
                        if open.is_empty() {
                            return Err(self.lexer.error(line, column, "`,` outside parentheses"));
                        }
                        break;
                    }
                    Some((Token::Close, line, column)) => {
                        let Some(g) = open.pop() else {
                            return Err(self.lexer.error(line, column, "unbalanced `)`"));
                        };
                        let mut node = std::mem::take(&mut nodes[g]);
                        self.tail(&mut node)?;
                        nodes[g] = node;
                    }
                    Some((Token::Semicolon, line, column)) => {
                        if !open.is_empty() {
                            return Err(self.lexer.error(line, column, "`;` before all groups are closed"));
                        }
                        return Ok(Some(RawTree { nodes }));
                    }
                    None => {
                        if !open.is_empty() {
                            return Err(self.lexer.error(
                                self.lexer.line,
                                self.lexer.column,
                                "unexpected end of input inside parentheses",
                            ));
                        }
                        return Ok(Some(RawTree { nodes }));
                    }
                    Some((token, line, column)) => {
                        return Err(self.lexer.error(line, column, format!("unexpected {token:?}")));
                    }
                }
            }
        }
    }
}

fn parse_all(text: &str) -> Result<Vec<RawTree>, NewickError> {
    let mut parser = Parser {
        lexer: Lexer::new(text),
        peeked: None,
    };
    let mut trees = Vec::new();
    while let Some(tree) = parser.tree()? {
        trees.push(tree);
    }
    if trees.is_empty() {
        return Err(NewickError::Syntax {
            line: 1,
            column: 1,
            message: "no tree found".into(),
        });
    }
    Ok(trees)
}

impl RawTree {
    /// End height of every node, measured from the start of the root edge.
    fn heights(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.nodes.len()];
        h[0] = self.nodes[0].length.unwrap_or(0.0);
        // parents precede children in creation order
        for (i, node) in self.nodes.iter().enumerate() {
            for &c in &node.children {
                h[c] = h[i] + self.nodes[c].length.unwrap_or(0.0);
            }
        }
        h
    }

    fn declared_mode(&self) -> Option<NewickMode> {
        match self.nodes[0].meta("tree") {
            Some("complete") => Some(NewickMode::Complete),
            Some("lineage") => Some(NewickMode::LineageOnly),
            _ => None,
        }
    }

    fn declared_origin(&self) -> Option<f64> {
        self.nodes[0].meta("origin").and_then(|v| v.parse().ok())
    }

    fn into_complete(self, scale: f64) -> Result<CompleteTree, NewickError> {
        let heights: Vec<f64> = self.heights().into_iter().map(|h| h * scale).collect();
        let tips_max = self
            .nodes
            .iter()
            .zip(&heights)
            .filter(|(n, _)| n.children.is_empty())
            .map(|(_, &h)| h)
            .fold(0.0, f64::max);
        let origin = self.declared_origin().map_or(tips_max, |o| o * scale);
        let tol = 1e-9 * origin.max(1.0);
        // (parent species, birth, death, extant, node) in discovery order
        let mut found: Vec<(Option<usize>, f64, f64, bool, usize)> = vec![(None, 0.0, 0.0, false, 0)];
        let mut stack = vec![(0usize, 0usize)];
        while let Some((node, sp)) = stack.pop() {
            let raw = &self.nodes[node];
            match raw.children.as_slice() {
                [] => {
                    let extant = match raw.meta("status") {
                        Some("extant") => true,
                        Some("extinct") => false,
                        _ => (heights[node] - origin).abs() <= tol,
                    };
                    found[sp].2 = if extant { origin } else { heights[node] };
                    found[sp].3 = extant;
                    found[sp].4 = node;
                }
                [only] => stack.push((*only, sp)),
                [first, second] => {
                    let born = found.len();
                    found.push((Some(sp), heights[node], 0.0, false, *second));
                    stack.push((*second, born));
                    stack.push((*first, sp));
                }
                _ => {
                    return Err(NewickError::Syntax {
                        line: raw.line,
                        column: raw.column,
                        message: "a complete tree splits into exactly two lineages at each birth".into(),
                    })
                }
            }
        }
        // renumber depth-first, children latest-born first
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); found.len()];
        for (i, f) in found.iter().enumerate().skip(1) {
            kids[f.0.expect("non-root")].push(i);
        }
        let mut order = Vec::with_capacity(found.len());
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            order.push(i);
            let mut c = kids[i].clone();
            // latest-born must be visited first, so it goes on top
            c.sort_by(|&a, &b| found[a].1.total_cmp(&found[b].1));
            stack.extend(c);
        }
        let mut new_index = vec![0usize; found.len()];
        for (k, &i) in order.iter().enumerate() {
            new_index[i] = k;
        }
        let species: Vec<Species> = order
            .iter()
            .map(|&i| {
                let f = found[i];
                Species {
                    parent: f.0.map(|p| new_index[p]),
                    birth: f.1,
                    death: f.2,
                    extant: f.3,
                }
            })
            .collect();
        CompleteTree::new(origin, species).map_err(|e| {
            let node = match e {
                cladesim_core::Error::InvalidTree { node, .. } => found[order[node]].4,
                _ => 0,
            };
            NewickError::InvalidTree {
                reason: e,
                line: self.nodes[node].line,
                column: self.nodes[node].column,
            }
        })
    }

    fn into_lineage(self, scale: f64) -> Result<(f64, LineagePointProcess), NewickError> {
        let heights: Vec<f64> = self.heights().into_iter().map(|h| h * scale).collect();
        let mut top = None;
        for (node, &h) in self.nodes.iter().zip(&heights) {
            if node.children.is_empty() {
                let expected = *top.get_or_insert(h);
                if (h - expected).abs() > 1e-9 * expected.abs().max(1.0) {
                    return Err(NewickError::NotUltrametric {
                        line: node.line,
                        column: node.column,
                        height: h / scale,
                        expected: expected / scale,
                    });
                }
            }
        }
        let top = top.expect("at least one node");
        let origin = self.declared_origin().map_or(top, |o| o * scale);
        // in-order walk: a node's depth separates each pair of its children
        let mut depths = Vec::new();
        enum Visit {
            Node(usize),
            Gap(usize),
        }
        let mut stack = vec![Visit::Node(0)];
        while let Some(v) = stack.pop() {
            match v {
                Visit::Gap(node) => depths.push((top - heights[node]).max(0.0)),
                Visit::Node(node) => {
                    let kids = &self.nodes[node].children;
                    for (k, &c) in kids.iter().enumerate().rev() {
                        stack.push(Visit::Node(c));
                        if k > 0 {
                            stack.push(Visit::Gap(node));
                        }
                    }
                }
            }
        }
        let marks = LineagePointProcess::new(depths)
            .map_err(|reason| NewickError::InvalidTree {
            reason,
            line: self.nodes[0].line,
            column: self.nodes[0].column,
        })?;
        Ok((origin, marks))
    }

    fn into_tree(self, mode: Option<NewickMode>, scale: f64) -> Result<ImportedTree, NewickError> {
        let mode = mode.or(self.declared_mode()).unwrap_or(NewickMode::Complete);
        Ok(match mode {
            NewickMode::Complete => ImportedTree::Complete(self.into_complete(scale)?),
            NewickMode::LineageOnly => {
                let (origin, marks) = self.into_lineage(scale)?;
                ImportedTree::Lineage { origin, marks }
            }
        })
    }
}

/// Reads every tree in `text`. With `mode` absent the root's `tree=`
/// annotation decides, defaulting to a complete tree.
pub fn import_newick_all(
    text: &str,
    mode: Option<NewickMode>,
    rate_scale: f64,
) -> Result<Vec<ImportedTree>, NewickError> {
    parse_all(text)?
        .into_iter()
        .map(|t| t.into_tree(mode, rate_scale))
        .collect()
}

/// Reads a single tree.
pub fn import_newick(text: &str, mode: Option<NewickMode>, rate_scale: f64) -> Result<ImportedTree, NewickError> {
    let mut trees = parse_all(text)?;
    if trees.len() > 1 {
        return Err(NewickError::Syntax {
            line: 1,
            column: 1,
            message: format!("expected one tree, found {}", trees.len()),
        });
    }
    trees.pop().expect("non-empty").into_tree(mode, rate_scale)
}
