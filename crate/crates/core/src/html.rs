//! Tolerant scanner for `<script>` elements in HTML.
//!
//! This is not an HTML parser. It walks the markup once, skips comments,
//! reads the attributes of `<script>` and `<base>` start tags, and captures
//! inline script bodies up to the next `</script`. Malformed markup is
//! scanned best-effort and never produces an error.

use std::collections::HashSet;

use url::Url;

/// A `<script>` element as it appears in the markup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawScript {
    /// Entity-decoded `src` attribute, if present.
    pub src: Option<String>,
    /// Entity-decoded `type` attribute, if present.
    pub script_type: Option<String>,
    /// Element body (only meaningful when `src` is absent).
    pub body: String,
}

impl RawScript {
    /// Whether the `type` attribute names JavaScript (absent counts as yes).
    pub fn is_javascript(&self) -> bool {
        let Some(t) = &self.script_type else {
            return true;
        };
        let t = t.trim().to_ascii_lowercase();
        let essence = t.split(';').next().unwrap_or("").trim();
        matches!(
            essence,
            "" | "module"
                | "text/javascript"
                | "application/javascript"
                | "application/x-javascript"
                | "text/ecmascript"
                | "application/ecmascript"
                | "text/jscript"
                | "text/livescript"
                | "text/x-javascript"
        )
    }
}

/// A script used by a page, after URL resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PageScript {
    External(Url),
    Inline(String),
}

/// Result of one pass over a document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanResult {
    pub scripts: Vec<RawScript>,
    /// `href` of the first `<base>` element, if any.
    pub base_href: Option<String>,
}

/// Scan `html` for script and base elements in document order.
pub fn scan(html: &str) -> ScanResult {
    let mut out = ScanResult::default();
    let bytes = html.as_bytes();
    let mut pos = 0;
    while let Some(off) = html[pos..].find('<') {
        pos += off;
        let rest = &html[pos..];
        if let Some(comment) = rest.strip_prefix("<!--") {
            pos = match comment.find("-->") {
                Some(end) => pos + 4 + end + 3,
                None => html.len(),
            };
            continue;
        }
        let Some(name_len) = tag_name_len(&bytes[pos + 1..]) else {
            pos += 1;
            continue;
        };
        let name = &rest[1..1 + name_len];
        let attrs_start = pos + 1 + name_len;
        let (attrs, tag_end) = parse_attributes(html, attrs_start);
        pos = tag_end;
        if name.eq_ignore_ascii_case("script") {
            let body_end = find_ci(&html[pos..], "</script").map_or(html.len(), |i| pos + i);
            let body = html[pos..body_end].to_string();
            pos = body_end;
            out.scripts.push(RawScript {
                src: attr(&attrs, "src"),
                script_type: attr(&attrs, "type"),
                body,
            });
        } else if name.eq_ignore_ascii_case("base") && out.base_href.is_none() {
            out.base_href = attr(&attrs, "href");
        }
    }
    out
}

/// Every external script reference in `html`, resolved against `base_url`
/// (or the document's `<base href>`), in document order without duplicates.
/// Only `http` and `https` URLs are returned.
pub fn extract_script_urls(html: &str, base_url: &Url) -> Vec<Url> {
    extract_scripts(html, base_url)
        .into_iter()
        .filter_map(|s| match s {
            PageScript::External(u) => Some(u),
            PageScript::Inline(_) => None,
        })
        .collect()
}

/// External references (deduplicated) and non-empty inline JavaScript bodies,
/// in document order.
pub fn extract_scripts(html: &str, base_url: &Url) -> Vec<PageScript> {
    let scan = scan(html);
    let base = scan
        .base_href
        .as_deref()
        .and_then(|h| base_url.join(h.trim()).ok())
        .unwrap_or_else(|| base_url.clone());
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for s in scan.scripts {
        match &s.src {
            Some(src) if src.trim().is_empty() => {}
            Some(src) => {
                let Ok(u) = base.join(src.trim()) else {
                    continue;
                };
                if !matches!(u.scheme(), "http" | "https") {
                    continue;
                }
                if seen.insert(u.clone()) {
                    out.push(PageScript::External(u));
                }
            }
            None if s.is_javascript() && !s.body.trim().is_empty() => {
                out.push(PageScript::Inline(s.body));
            }
            None => {}
        }
    }
    out
}

fn tag_name_len(b: &[u8]) -> Option<usize> {
    if !b.first()?.is_ascii_alphabetic() {
        return None;
    }
    Some(
        b.iter()
            .take_while(|c| c.is_ascii_alphanumeric() || **c == b'-')
            .count(),
    )
}

fn find_ci(hay: &str, needle: &str) -> Option<usize> {
    let n = needle.len();
    hay.as_bytes()
        .windows(n)
        .position(|w| w.eq_ignore_ascii_case(needle.as_bytes()))
}

fn attr(attrs: &[(String, String)], name: &str) -> Option<String> {
    attrs
        .iter()
        .find(|(k, _)| k == name)
        .map(|(_, v)| v.clone())
}

/// Parse attributes starting right after the tag name. Returns the attributes
/// (names lowercased, first occurrence wins) and the offset just past `>`.
fn parse_attributes(html: &str, mut pos: usize) -> (Vec<(String, String)>, usize) {
    let b = html.as_bytes();
    let mut attrs: Vec<(String, String)> = Vec::new();
    loop {
        while pos < b.len() && (b[pos].is_ascii_whitespace() || b[pos] == b'/') {
            pos += 1;
        }
        if pos >= b.len() {
            return (attrs, b.len());
        }
        if b[pos] == b'>' {
            return (attrs, pos + 1);
        }
        let start = pos;
        while pos < b.len()
            && !b[pos].is_ascii_whitespace()
            && !matches!(b[pos], b'=' | b'>' | b'/')
        {
            pos += 1;
        }
        if pos == start {
            // stray '=' or similar
            pos += 1;
            continue;
        }
        let name = html[start..pos].to_ascii_lowercase();
        while pos < b.len() && b[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let mut value = String::new();
        if pos < b.len() && b[pos] == b'=' {
            pos += 1;
            while pos < b.len() && b[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < b.len() && (b[pos] == b'"' || b[pos] == b'\'') {
                let q = b[pos];
                let vstart = pos + 1;
                let vend = b[vstart..]
                    .iter()
                    .position(|&c| c == q)
                    .map_or(b.len(), |i| vstart + i);
                value = decode_entities(&html[vstart..vend]);
                pos = (vend + 1).min(b.len());
            } else {
                let vstart = pos;
                while pos < b.len() && !b[pos].is_ascii_whitespace() && b[pos] != b'>' {
                    pos += 1;
                }
                value = decode_entities(&html[vstart..pos]);
            }
        }
        if !attrs.iter().any(|(k, _)| *k == name) {
            attrs.push((name, value));
        }
    }
}

/// Decode the character references that commonly appear in URLs.
fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        let end = rest[1..].find(';').map(|e| e + 1).filter(|&e| e <= 10);
        let decoded = end.and_then(|e| {
            let ent = &rest[1..e];
            let c = match ent {
                "amp" => Some('&'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "lt" => Some('<'),
                "gt" => Some('>'),
                _ if ent.starts_with("#x") || ent.starts_with("#X") => {
                    u32::from_str_radix(&ent[2..], 16)
                        .ok()
                        .and_then(char::from_u32)
                }
                _ if ent.starts_with('#') => ent[1..].parse().ok().and_then(char::from_u32),
                _ => None,
            };
            c.map(|c| (c, e + 1))
        });
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &rest[len..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}
