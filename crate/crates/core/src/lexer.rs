//! Best-effort JavaScript lexer that yields identifier and property-name tokens.
//!
//! Comments, string literals, numeric literals, regular-expression literals and
//! the literal text of template strings produce no tokens. Expressions inside
//! template `${...}` interpolations are lexed as code. Reserved words are
//! dropped unless they appear as a property name (`a.delete`).
//!
//! A `/` is read as the start of a regular expression only when the previous
//! significant token cannot end an expression (an operator, an opening
//! bracket, the start of input, or a keyword such as `return`). Anything else,
//! including a `/` after `}` or `)`, is division.
//!
//! The lexer never fails: unterminated comments, strings and templates run to
//! the end of input.

use std::borrow::Cow;

/// Lex `source` into identifier tokens in source order.
pub fn tokenize(source: &str) -> Vec<Cow<'_, str>> {
    Tokens::new(source).collect()
}

/// Like [`tokenize`] but for raw bytes; invalid UTF-8 is replaced first.
pub fn tokenize_bytes(source: &[u8]) -> Vec<String> {
    let text = String::from_utf8_lossy(source);
    Tokens::new(&text).map(Cow::into_owned).collect()
}

const RESERVED: &[&str] = &[
    "await",
    "break",
    "case",
    "catch",
    "class",
    "const",
    "continue",
    "debugger",
    "default",
    "delete",
    "do",
    "else",
    "enum",
    "export",
    "extends",
    "false",
    "finally",
    "for",
    "function",
    "if",
    "implements",
    "import",
    "in",
    "instanceof",
    "interface",
    "let",
    "new",
    "null",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "static",
    "super",
    "switch",
    "this",
    "throw",
    "true",
    "try",
    "typeof",
    "var",
    "void",
    "while",
    "with",
    "yield",
];

/// Reserved words after which an expression (and so a regex) may follow.
fn keyword_allows_regex(word: &str) -> bool {
    !matches!(word, "this" | "super" | "null" | "true" | "false")
}

fn is_reserved(word: &str) -> bool {
    RESERVED.binary_search(&word).is_ok()
}

fn is_id_start(c: char) -> bool {
    c == '$' || c == '_' || c.is_ascii_alphabetic() || (!c.is_ascii() && c.is_alphabetic())
}

fn is_id_continue(c: char) -> bool {
    c == '$'
        || c == '_'
        || c.is_ascii_alphanumeric()
        || c == '\u{200c}'
        || c == '\u{200d}'
        || (!c.is_ascii() && c.is_alphanumeric())
}

/// Iterator over the identifier tokens of a script.
pub struct Tokens<'a> {
    src: &'a str,
    pos: usize,
    regex_allowed: bool,
    after_dot: bool,
    /// One entry per open `${`: the `{` nesting depth inside that interpolation.
    templates: Vec<usize>,
    in_template_text: bool,
}

impl<'a> Tokens<'a> {
    pub fn new(src: &'a str) -> Self {
        Tokens {
            src,
            pos: 0,
            regex_allowed: true,
            after_dot: false,
            templates: Vec::new(),
            in_template_text: false,
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.rest().chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_line(&mut self) {
        match self.rest().find(['\n', '\r', '\u{2028}', '\u{2029}']) {
            Some(i) => self.pos += i,
            None => self.pos = self.src.len(),
        }
    }

    fn skip_block_comment(&mut self) {
        // positioned after "/*"
        match self.rest().find("*/") {
            Some(i) => self.pos += i + 2,
            None => self.pos = self.src.len(),
        }
    }

    fn skip_string(&mut self, quote: char) {
        while let Some(c) = self.bump() {
            match c {
                '\\' => {
                    self.bump();
                }
                '\n' | '\r' => break,
                c if c == quote => break,
                _ => {}
            }
        }
    }

    /// Scan template text up to the closing backtick or the next `${`.
    fn skip_template_text(&mut self) {
        while let Some(c) = self.bump() {
            match c {
                '\\' => {
                    self.bump();
                }
                '`' => {
                    self.in_template_text = false;
                    self.regex_allowed = false;
                    return;
                }
                '$' if self.peek() == Some('{') => {
                    self.bump();
                    self.templates.push(0);
                    self.in_template_text = false;
                    self.regex_allowed = true;
                    return;
                }
                _ => {}
            }
        }
        self.in_template_text = false;
    }

    fn skip_regex(&mut self) {
        let mut in_class = false;
        while let Some(c) = self.peek() {
            match c {
                '\n' | '\r' | '\u{2028}' | '\u{2029}' => return,
                _ => {}
            }
            self.bump();
            match c {
                '\\' => {
                    self.bump();
                }
                '[' => in_class = true,
                ']' => in_class = false,
                '/' if !in_class => break,
                _ => {}
            }
        }
        while self.peek().is_some_and(is_id_continue) {
            self.bump();
        }
    }

    fn skip_number(&mut self) {
        while let Some(c) = self.peek() {
            let digit_part = c.is_ascii_alphanumeric() || c == '_' || c == '.';
            let exponent_sign = (c == '+' || c == '-')
                && matches!(
                    self.src.as_bytes().get(self.pos.wrapping_sub(1)),
                    Some(b'e' | b'E')
                )
                && !self.rest_is_hex_literal();
            if !(digit_part || exponent_sign) {
                break;
            }
            self.bump();
        }
    }

    fn rest_is_hex_literal(&self) -> bool {
        // walk back to the start of this numeric literal
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i > 0
            && (bytes[i - 1].is_ascii_alphanumeric()
                || bytes[i - 1] == b'_'
                || bytes[i - 1] == b'.')
        {
            i -= 1;
        }
        bytes.get(i) == Some(&b'0') && matches!(bytes.get(i + 1), Some(b'x' | b'X'))
    }

    /// Read `\uXXXX` or `\u{X...}` after the backslash has been consumed.
    fn read_unicode_escape(&mut self) -> Option<char> {
        let save = self.pos;
        if self.bump() != Some('u') {
            self.pos = save;
            return None;
        }
        let code = if self.peek() == Some('{') {
            self.bump();
            let end = self.rest().find('}')?;
            let hex = &self.rest()[..end];
            self.pos += end + 1;
            u32::from_str_radix(hex, 16).ok()
        } else {
            let hex = self.rest().get(..4)?;
            self.pos += 4;
            u32::from_str_radix(hex, 16).ok()
        };
        let c = code.and_then(char::from_u32);
        if c.is_none() {
            self.pos = save;
        }
        c
    }

    fn scan_identifier(&mut self) -> Option<Cow<'a, str>> {
        let start = self.pos;
        let mut owned: Option<String> = None;
        while let Some(c) = self.peek() {
            let at_start = self.pos == start;
            if c == '\\' {
                let save = self.pos;
                self.bump();
                match self.read_unicode_escape() {
                    Some(d) if (at_start && is_id_start(d)) || (!at_start && is_id_continue(d)) => {
                        let buf = owned.get_or_insert_with(|| self.src[start..save].to_string());
                        buf.push(d);
                    }
                    _ => {
                        self.pos = save;
                        break;
                    }
                }
                continue;
            }
            let ok = if at_start {
                is_id_start(c)
            } else {
                is_id_continue(c)
            };
            if !ok {
                break;
            }
            self.bump();
            if let Some(buf) = owned.as_mut() {
                buf.push(c);
            }
        }
        if self.pos == start {
            // lone backslash
            self.bump();
            return None;
        }
        Some(match owned {
            Some(s) => Cow::Owned(s),
            None => Cow::Borrowed(&self.src[start..self.pos]),
        })
    }
}

impl<'a> Iterator for Tokens<'a> {
    type Item = Cow<'a, str>;

    fn next(&mut self) -> Option<Cow<'a, str>> {
        loop {
            if self.in_template_text {
                self.skip_template_text();
                continue;
            }
            let c = self.peek()?;
            if c.is_whitespace() || c == '\u{feff}' {
                self.bump();
                continue;
            }
            if c == '\\' || is_id_start(c) {
                let Some(word) = self.scan_identifier() else {
                    self.regex_allowed = true;
                    self.after_dot = false;
                    continue;
                };
                let after_dot = std::mem::take(&mut self.after_dot);
                if !after_dot && is_reserved(&word) {
                    self.regex_allowed = keyword_allows_regex(&word);
                    continue;
                }
                self.regex_allowed = false;
                return Some(word);
            }
            if c.is_ascii_digit() || (c == '.' && self.peek2().is_some_and(|d| d.is_ascii_digit()))
            {
                self.skip_number();
                self.regex_allowed = false;
                self.after_dot = false;
                continue;
            }
            self.bump();
            match c {
                '/' => match self.peek() {
                    Some('/') => {
                        self.skip_line();
                        continue;
                    }
                    Some('*') => {
                        self.bump();
                        self.skip_block_comment();
                        continue;
                    }
                    _ if self.regex_allowed => {
                        self.skip_regex();
                        self.regex_allowed = false;
                    }
                    _ => self.regex_allowed = true,
                },
                '\'' | '"' => {
                    self.skip_string(c);
                    self.regex_allowed = false;
                }
                '`' => {
                    self.in_template_text = true;
                }
                '#' if self.pos == 1 && self.peek() == Some('!') => {
                    self.skip_line();
                    continue;
                }
                '#' => {
                    // private name: the identifier that follows is emitted
                    continue;
                }
                '.' => {
                    self.after_dot = true;
                    self.regex_allowed = true;
                    continue;
                }
                '{' => {
                    if let Some(depth) = self.templates.last_mut() {
                        *depth += 1;
                    }
                    self.regex_allowed = true;
                }
                '}' => match self.templates.last_mut() {
                    Some(0) => {
                        self.templates.pop();
                        self.in_template_text = true;
                    }
                    Some(depth) => {
                        *depth -= 1;
                        self.regex_allowed = false;
                    }
                    None => self.regex_allowed = false,
                },
                ')' | ']' => self.regex_allowed = false,
                '?' if self.peek() == Some('.')
                    && !self.peek2().is_some_and(|d| d.is_ascii_digit()) =>
                {
                    self.bump();
                    self.after_dot = true;
                    self.regex_allowed = true;
                    continue;
                }
                _ => self.regex_allowed = true,
            }
            self.after_dot = false;
        }
    }
}
