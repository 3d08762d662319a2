//! Problem files: an `lhs:` section and an optional `rhs:` section, each
//! holding one symbolic heap. A file without section labels is a lone `lhs`.

use super::{ParseContext, ParseError, SymbolicHeap};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemFile {
    pub lhs: SymbolicHeap,
    pub rhs: Option<SymbolicHeap>,
}

struct Section {
    lines: Vec<String>,
    first_line: usize,
}

impl Section {
    fn text(&self) -> String {
        self.lines.join("\n")
    }
}

fn strip_label<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    let t = line.trim_start();
    t.strip_prefix(label).and_then(|r| r.trim_start().strip_prefix(':'))
}

fn split_sections(text: &str) -> Result<(Section, Option<Section>), ParseError> {
    let mut preamble = Section { lines: Vec::new(), first_line: 0 };
    let mut lhs: Option<Section> = None;
    let mut rhs: Option<Section> = None;
    let mut in_rhs = false;
    for (i, line) in text.lines().enumerate() {
        let label = strip_label(line, "lhs").map(|r| (false, r)).or_else(|| strip_label(line, "rhs").map(|r| (true, r)));
        if let Some((is_rhs, rest)) = label {
            let slot = if is_rhs { &mut rhs } else { &mut lhs };
            if slot.is_some() {
                let name = if is_rhs { "rhs" } else { "lhs" };
                return Err(ParseError { line: i + 1, column: 1, message: format!("duplicate '{name}:' section") });
            }
            let pad = line.len() - rest.len();
            *slot = Some(Section { lines: vec![format!("{}{}", " ".repeat(pad), rest)], first_line: i });
            in_rhs = is_rhs;
            continue;
        }
        let section = match (&mut lhs, &mut rhs, in_rhs) {
            (_, Some(r), true) => r,
            (Some(l), _, false) => l,
            _ => &mut preamble,
        };
        section.lines.push(line.to_string());
    }
    let has_code = |s: &Section| s.lines.iter().any(|l| !l.split('#').next().unwrap_or("").trim().is_empty());
    match lhs {
        Some(l) => {
            if has_code(&preamble) {
                return Err(ParseError { line: 1, column: 1, message: "text before the 'lhs:' section".into() });
            }
            Ok((l, rhs))
        }
        None if rhs.is_some() => Err(ParseError { line: 1, column: 1, message: "missing 'lhs:' section".into() }),
        None => Ok((preamble, None)),
    }
}

/// Parses a problem file. Variables introduced for `t - n` only in the
/// `rhs` are existentially bound there.
pub fn parse_problem(text: &str) -> Result<ProblemFile, ParseError> {
    let (lhs_sec, rhs_sec) = split_sections(text)?;
    let mut ctx = ParseContext::new();
    ctx.reserve_text(text);
    let lhs = ctx.parse_heap_at(&lhs_sec.text(), lhs_sec.first_line)?;
    let rhs = match rhs_sec {
        None => None,
        Some(sec) => {
            let before = ctx.created().len();
            let mut rhs = ctx.parse_heap_at(&sec.text(), sec.first_line)?;
            let lhs_fv = lhs.fv();
            let new: Vec<_> = ctx.created()[before..].to_vec();
            for v in new {
                if !lhs_fv.contains(&v) && !rhs.bound.contains(&v) {
                    rhs.bound.push(v);
                }
            }
            Some(rhs)
        }
    };
    Ok(ProblemFile { lhs, rhs })
}
