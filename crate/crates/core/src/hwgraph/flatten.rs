use std::collections::{BTreeMap, HashSet};

use super::{HwGraphError, SourceUnit};

/// Directives that carry no meaning for graph extraction and are dropped.
const STRIPPED_DIRECTIVES: &[&str] = &[
    "timescale",
    "default_nettype",
    "celldefine",
    "endcelldefine",
    "resetall",
    "unconnected_drive",
    "nounconnected_drive",
];

/// A design concatenated into one source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatDesign {
    pub text: String,
    pub top_module: String,
    /// Occurrences of each declared module name as an identifier token in
    /// `text` (declaration plus every instantiation).
    pub module_counts: BTreeMap<String, usize>,
    /// Declared modules in source order.
    pub modules: Vec<String>,
}

/// Concatenates the design files into one text.
///
/// Comments and stripped directives are removed, `` `include `` directives
/// are replaced by the referenced file from the same design, and the top
/// module is chosen by [`find_top_module`] unless `top` names it.
pub fn flatten(design: &SourceUnit, top: Option<&str>) -> Result<FlatDesign, HwGraphError> {
    if design.files.is_empty() {
        return Err(HwGraphError::EmptyDesign);
    }
    let stripped: Vec<(String, String)> = design
        .files
        .iter()
        .map(|(path, text)| (path.clone(), strip_comments(text)))
        .collect();
    for (path, text) in &stripped {
        if text.trim().is_empty() {
            return Err(HwGraphError::EmptyFile(path.clone()));
        }
    }

    let mut included = HashSet::new();
    for (path, text) in &stripped {
        for inc in include_targets(text) {
            let idx = resolve_include(&stripped, path, &inc).ok_or_else(|| HwGraphError::UnresolvedInclude {
                file: path.clone(),
                include: inc.clone(),
            })?;
            included.insert(idx);
        }
    }

    let mut text = String::new();
    let mut modules = Vec::new();
    let mut declared_in: BTreeMap<String, String> = BTreeMap::new();
    for (idx, (path, _)) in stripped.iter().enumerate() {
        if included.contains(&idx) {
            continue;
        }
        let mut stack = Vec::new();
        let expanded = expand(&stripped, idx, &mut stack)?;
        if !balanced(&expanded) {
            return Err(HwGraphError::Unbalanced(path.clone()));
        }
        for name in declared_modules(&expanded) {
            if let Some(first) = declared_in.get(&name) {
                return Err(HwGraphError::DuplicateModule {
                    name,
                    first: first.clone(),
                    second: path.clone(),
                });
            }
            declared_in.insert(name.clone(), path.clone());
            modules.push(name);
        }
        text.push_str(&expanded);
        if !text.ends_with('\n') {
            text.push('\n');
        }
    }

    let mut module_counts: BTreeMap<String, usize> = modules.iter().map(|m| (m.clone(), 0)).collect();
    for word in identifier_tokens(&text) {
        if let Some(c) = module_counts.get_mut(word) {
            *c += 1;
        }
    }

    let top_module = match top {
        Some(t) if module_counts.contains_key(t) => t.to_string(),
        Some(t) => return Err(HwGraphError::UnknownTopModule(t.to_string())),
        None => find_top_module(&module_counts)?,
    };
    Ok(FlatDesign {
        text,
        top_module,
        module_counts,
        modules,
    })
}

/// Picks the unique module whose name occurs exactly once, i.e. is declared
/// but never instantiated.
pub fn find_top_module(counts: &BTreeMap<String, usize>) -> Result<String, HwGraphError> {
    let candidates: Vec<String> = counts
        .iter()
        .filter(|(_, &c)| c == 1)
        .map(|(m, _)| m.clone())
        .collect();
    match candidates.len() {
        0 => Err(HwGraphError::NoTopModule { counts: counts.clone() }),
        1 => Ok(candidates.into_iter().next().unwrap()),
        _ => Err(HwGraphError::AmbiguousTopModule {
            candidates,
            counts: counts.clone(),
        }),
    }
}

/// Removes `//` and `/* */` comments, keeping newlines so line numbers are
/// preserved. String literals are copied verbatim.
fn strip_comments(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                out.push(c);
                while let Some(d) = chars.next() {
                    out.push(d);
                    if d == '\\' {
                        if let Some(e) = chars.next() {
                            out.push(e);
                        }
                    } else if d == '"' || d == '\n' {
                        break;
                    }
                }
            }
            '/' if chars.peek() == Some(&'/') => {
                for d in chars.by_ref() {
                    if d == '\n' {
                        out.push('\n');
                        break;
                    }
                }
            }
            '/' if chars.peek() == Some(&'*') => {
                chars.next();
                let mut prev = '\0';
                for d in chars.by_ref() {
                    if d == '\n' {
                        out.push('\n');
                    }
                    if prev == '*' && d == '/' {
                        break;
                    }
                    prev = d;
                }
                out.push(' ');
            }
            _ => out.push(c),
        }
    }
    out
}

fn directive(line: &str) -> Option<(&str, &str)> {
    let rest = line.trim_start().strip_prefix('`')?;
    let end = rest
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .unwrap_or(rest.len());
    Some((&rest[..end], rest[end..].trim()))
}

fn include_targets(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(directive)
        .filter(|(name, _)| *name == "include")
        .map(|(_, arg)| arg.trim_matches(|c| c == '"' || c == '<' || c == '>').to_string())
        .collect()
}

fn resolve_include(files: &[(String, String)], from: &str, target: &str) -> Option<usize> {
    let dir = from.rfind('/').map(|i| &from[..=i]).unwrap_or("");
    let relative = format!("{dir}{target}");
    let base = |p: &str| p.rsplit('/').next().unwrap_or(p).to_string();
    files
        .iter()
        .position(|(p, _)| p == target || *p == relative)
        .or_else(|| files.iter().position(|(p, _)| base(p) == base(target)))
}

fn expand(files: &[(String, String)], idx: usize, stack: &mut Vec<usize>) -> Result<String, HwGraphError> {
    let (path, text) = &files[idx];
    stack.push(idx);
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        match directive(line) {
            Some(("include", arg)) => {
                let target = arg.trim_matches(|c| c == '"' || c == '<' || c == '>');
                let unresolved = || HwGraphError::UnresolvedInclude {
                    file: path.clone(),
                    include: target.to_string(),
                };
                let inc = resolve_include(files, path, target).ok_or_else(unresolved)?;
                if stack.contains(&inc) {
                    return Err(unresolved());
                }
                out.push_str(&expand(files, inc, stack)?);
                out.push('\n');
            }
            Some((name, _)) if STRIPPED_DIRECTIVES.contains(&name) => out.push('\n'),
            _ => {
                out.push_str(line);
                out.push('\n');
            }
        }
    }
    stack.pop();
    Ok(out)
}

/// Identifier-like tokens, skipping the digits of based literals such as
/// `8'hFF` and the bodies of string literals.
pub(super) fn identifier_tokens(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'"' {
            i += 1;
            while i < bytes.len() && bytes[i] != b'"' && bytes[i] != b'\n' {
                i += if bytes[i] == b'\\' { 2 } else { 1 };
            }
            i += 1;
        } else if c == b'\'' {
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'?') {
                i += 1;
            }
        } else if c == b'\\' {
            let start = i + 1;
            i = start;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            out.push(&text[start..i]);
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$') {
                i += 1;
            }
            out.push(&text[start..i]);
        } else if c.is_ascii_digit() || c == b'$' || c == b'`' {
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$') {
                i += 1;
            }
        } else {
            i += 1;
        }
    }
    out
}

fn balanced(text: &str) -> bool {
    let mut depth: i64 = 0;
    for w in identifier_tokens(text) {
        match w {
            "module" | "macromodule" => depth += 1,
            "endmodule" => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => {}
        }
    }
    depth == 0
}

fn declared_modules(text: &str) -> Vec<String> {
    let words = identifier_tokens(text);
    words
        .windows(2)
        .filter(|w| w[0] == "module" || w[0] == "macromodule")
        .map(|w| w[1].to_string())
        .collect()
}
