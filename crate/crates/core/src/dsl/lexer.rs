//! Tokenizer shared by the rule-pack and problem-file parsers.

use super::DslError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Name(String),
    Int(u64),
    Str(String),
    Sym(char),
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Name(n) => format!("`{n}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Sym(c) => format!("`{c}`"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMBOLS: &[char] = &['/', '(', ')', ',', ';', '{', '}', ':', '?'];

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, DslError> {
    let mut out = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c == '#' {
                break;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Name(chars[start..i].iter().collect()),
                    line: line_no,
                    col,
                });
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let value = digits.parse().map_err(|_| DslError::Syntax {
                    line: line_no,
                    col,
                    message: format!("integer `{digits}` is too large"),
                })?;
                out.push(Token {
                    tok: Tok::Int(value),
                    line: line_no,
                    col,
                });
            } else if c == '"' {
                i += 1;
                let mut s = String::new();
                let mut closed = false;
                while i < chars.len() {
                    match chars[i] {
                        '"' => {
                            closed = true;
                            i += 1;
                            break;
                        }
                        '\\' if i + 1 < chars.len() => {
                            let esc = chars[i + 1];
                            match esc {
                                '"' | '\\' => s.push(esc),
                                'n' => s.push('\n'),
                                other => {
                                    return Err(DslError::Syntax {
                                        line: line_no,
                                        col: i + 1,
                                        message: format!("unknown escape `\\{other}`"),
                                    })
                                }
                            }
                            i += 2;
                        }
                        ch => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                if !closed {
                    return Err(DslError::Syntax {
                        line: line_no,
                        col,
                        message: "unterminated string literal".to_string(),
                    });
                }
                out.push(Token {
                    tok: Tok::Str(s),
                    line: line_no,
                    col,
                });
            } else if SYMBOLS.contains(&c) {
                out.push(Token {
                    tok: Tok::Sym(c),
                    line: line_no,
                    col,
                });
                i += 1;
            } else {
                return Err(DslError::Syntax {
                    line: line_no,
                    col,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    Ok(out)
}

/// Cursor over a token stream with position-aware error helpers.
pub(crate) struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Cursor {
    pub(crate) fn new(text: &str) -> Result<Self, DslError> {
        let tokens = tokenize(text)?;
        let lines = text.lines().count().max(1);
        let last_col = text.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
        Ok(Cursor {
            tokens,
            pos: 0,
            end: (lines, last_col),
        })
    }

    pub(crate) fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    pub(crate) fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset)
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub(crate) fn position(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.col)).unwrap_or(self.end)
    }

    pub(crate) fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> DslError {
        let (line, col) = self.position();
        DslError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn unexpected(&self, expected: &str) -> DslError {
        match self.peek() {
            Some(t) => self.error(format!("expected {expected}, found {}", t.tok.describe())),
            None => self.error(format!("expected {expected}, found end of input")),
        }
    }

    pub(crate) fn is_sym(&self, c: char) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(s), .. }) if *s == c)
    }

    pub(crate) fn is_name(&self, name: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Name(n), .. }) if n == name)
    }

    /// `true` when the next two tokens are `name :`.
    pub(crate) fn is_section(&self, name: &str) -> bool {
        self.is_name(name)
            && matches!(self.peek_at(1), Some(Token { tok: Tok::Sym(':'), .. }))
    }

    /// `true` when the next two tokens are any `NAME :`.
    pub(crate) fn is_any_section(&self) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Name(_), .. }))
            && matches!(self.peek_at(1), Some(Token { tok: Tok::Sym(':'), .. }))
    }

    pub(crate) fn expect_sym(&mut self, c: char) -> Result<(), DslError> {
        if self.is_sym(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    pub(crate) fn expect_keyword(&mut self, kw: &str) -> Result<(), DslError> {
        if self.is_name(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub(crate) fn expect_section(&mut self, kw: &str) -> Result<(), DslError> {
        self.expect_keyword(kw)?;
        self.expect_sym(':')
    }

    pub(crate) fn expect_name(&mut self) -> Result<(String, usize, usize), DslError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Name(n),
                line,
                col,
            }) => {
                let out = (n.clone(), *line, *col);
                self.pos += 1;
                Ok(out)
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    pub(crate) fn expect_int(&mut self) -> Result<u64, DslError> {
        match self.peek() {
            Some(Token { tok: Tok::Int(i), .. }) => {
                let v = *i;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.unexpected("an integer")),
        }
    }

    pub(crate) fn expect_str(&mut self) -> Result<String, DslError> {
        match self.peek() {
            Some(Token { tok: Tok::Str(s), .. }) => {
                let v = s.clone();
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.unexpected("a string literal")),
        }
    }

    pub(crate) fn is_int(&self) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Int(_), .. }))
    }
}
