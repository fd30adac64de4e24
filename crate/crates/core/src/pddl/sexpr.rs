use super::{ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum SExpr {
    Atom(String, SourceSpan),
    List(Vec<SExpr>, SourceSpan),
}

impl SExpr {
    pub fn span(&self) -> &SourceSpan {
        match self {
            SExpr::Atom(_, s) | SExpr::List(_, s) => s,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a, _) => Some(a),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Atom(..) => None,
        }
    }

    /// Case-insensitive keyword test on an atom.
    pub fn is_keyword(&self, kw: &str) -> bool {
        self.as_atom().is_some_and(|a| a.eq_ignore_ascii_case(kw))
    }
}

/// Reads exactly one top-level s-expression. `;` starts a comment running to
/// end of line.
pub(crate) fn read(text: &str, file: &str) -> Result<SExpr, ParseError> {
    let mut reader = Reader {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        file,
    };
    reader.skip_trivia();
    if reader.at_end() {
        return Err(ParseError::new(
            reader.here(0),
            "empty input",
            Some("`(define ...)`"),
        ));
    }
    let expr = reader.expr()?;
    reader.skip_trivia();
    if !reader.at_end() {
        return Err(ParseError::new(
            reader.here(1),
            "trailing content after the top-level form",
            Some("end of input"),
        ));
    }
    Ok(expr)
}

struct Reader<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    file: &'a str,
}

impl Reader<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn here(&self, length: usize) -> SourceSpan {
        SourceSpan {
            file: self.file.to_string(),
            line: self.line,
            column: self.col,
            length,
        }
    }

    fn bump(&mut self) -> char {
        let c = self.chars[self.pos];
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn skip_trivia(&mut self) {
        while !self.at_end() {
            let c = self.chars[self.pos];
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while !self.at_end() && self.chars[self.pos] != '\n' {
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn expr(&mut self) -> Result<SExpr, ParseError> {
        let start = self.here(1);
        match self.chars[self.pos] {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    if self.at_end() {
                        return Err(ParseError::new(
                            start,
                            "unbalanced parentheses: `(` is never closed",
                            Some("`)`"),
                        ));
                    }
                    if self.chars[self.pos] == ')' {
                        self.bump();
                        break;
                    }
                    items.push(self.expr()?);
                }
                let mut span = start;
                span.length = 1;
                Ok(SExpr::List(items, span))
            }
            ')' => Err(ParseError::new(
                start,
                "unbalanced parentheses: unexpected `)`",
                None,
            )),
            _ => {
                let mut s = String::new();
                while !self.at_end() {
                    let c = self.chars[self.pos];
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(self.bump());
                }
                let mut span = start;
                span.length = s.chars().count();
                Ok(SExpr::Atom(s, span))
            }
        }
    }
}
