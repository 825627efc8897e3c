use crate::temporal::Duration;

use super::{TelError, TelErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Let,
    Answer,
    If,
    Then,
    Else,
    Ident(String),
    Int(i64),
    Str(String),
    Dur(Duration),
    Assign,
    LParen,
    RParen,
    Comma,
    Newline,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Let => "'let'".into(),
            Tok::Answer => "'answer'".into(),
            Tok::If => "'if'".into(),
            Tok::Then => "'then'".into(),
            Tok::Else => "'else'".into(),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Int(n) => format!("number {n}"),
            Tok::Str(_) => "string literal".into(),
            Tok::Dur(d) => format!("duration '{d}'"),
            Tok::Assign => "':='".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
    pub offset: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
    /// Byte offset just past the token.
    pub end: usize,
}

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, TelError> {
    Lexer { src, chars: src.char_indices().collect(), i: 0, line: 1, col: 1 }.run()
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    i: usize,
    line: usize,
    col: usize,
}

impl Lexer<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).map(|&(_, c)| c)
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.i).map_or(self.src.len(), |&(o, _)| o)
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, column: self.col, offset: self.offset() }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, pos: Pos, message: impl Into<String>) -> TelError {
        TelError::new(TelErrorKind::ParseError, pos, message)
    }

    fn run(mut self) -> Result<Vec<Token>, TelError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek(), Some(c) if c != '\n' && c.is_whitespace()) {
                self.bump();
            }
            if self.peek() == Some('#') {
                while matches!(self.peek(), Some(c) if c != '\n') {
                    self.bump();
                }
            }
            let pos = self.pos();
            let Some(c) = self.peek() else {
                out.push(Token { tok: Tok::Eof, pos, end: self.src.len() });
                return Ok(out);
            };
            let tok = match c {
                '\n' => {
                    self.bump();
                    Tok::Newline
                }
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                ':' if self.peek_at(1) == Some('=') => {
                    self.bump();
                    self.bump();
                    Tok::Assign
                }
                '"' => self.string(pos)?,
                '-' if matches!(self.peek_at(1), Some(d) if d.is_ascii_digit()) => {
                    self.bump();
                    self.number(pos, true)?
                }
                c if c.is_ascii_digit() => self.number(pos, false)?,
                c if c.is_alphabetic() || c == '_' => {
                    let word = self.word();
                    match word.as_str() {
                        "let" => Tok::Let,
                        "answer" => Tok::Answer,
                        "if" => Tok::If,
                        "then" => Tok::Then,
                        "else" => Tok::Else,
                        _ => Tok::Ident(word),
                    }
                }
                other => return Err(self.err(pos, format!("unexpected character {other:?}"))),
            };
            out.push(Token { tok, pos, end: self.offset() });
        }
    }

    fn word(&mut self) -> String {
        let mut w = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                w.push(c);
                self.bump();
            } else {
                break;
            }
        }
        w
    }

    fn string(&mut self, pos: Pos) -> Result<Tok, TelError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(self.err(pos, "unterminated string literal")),
                Some('"') => return Ok(Tok::Str(s)),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    _ => return Err(self.err(self.pos(), "bad escape in string literal")),
                },
                Some(c) => s.push(c),
            }
        }
    }

    /// An integer, or a duration literal when a unit word follows.
    fn number(&mut self, pos: Pos, negative: bool) -> Result<Tok, TelError> {
        let mut digits = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            digits.push(c);
            self.bump();
        }
        if matches!(self.peek(), Some(c) if c.is_alphabetic() || c == '_') {
            return Err(self.err(self.pos(), format!("malformed number '{digits}…'")));
        }
        let magnitude: i64 =
            digits.parse().map_err(|_| self.err(pos, format!("number {digits} is too large")))?;
        let n = if negative { -magnitude } else { magnitude };

        // Look past spaces for a unit word without consuming anything else.
        let save = (self.i, self.line, self.col);
        while matches!(self.peek(), Some(' ') | Some('\t')) {
            self.bump();
        }
        if matches!(self.peek(), Some(c) if c.is_alphabetic()) {
            let word = self.word();
            let too_big = || self.err(pos, format!("duration {n} {word} is too large"));
            let dur = match word.as_str() {
                "day" | "days" => Some(Duration::days(n)),
                "week" | "weeks" => Some(Duration::days(n.checked_mul(7).ok_or_else(too_big)?)),
                "month" | "months" => Some(Duration::months(i32::try_from(n).map_err(|_| too_big())?)),
                "year" | "years" => Some(Duration::years(i32::try_from(n).map_err(|_| too_big())?)),
                _ => None,
            };
            if let Some(d) = dur {
                return Ok(Tok::Dur(d));
            }
        }
        (self.i, self.line, self.col) = save;
        Ok(Tok::Int(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn durations_and_ints() {
        assert_eq!(
            toks("add(d, 2 weeks) # note"),
            vec![
                Tok::Ident("add".into()),
                Tok::LParen,
                Tok::Ident("d".into()),
                Tok::Comma,
                Tok::Dur(Duration::days(14)),
                Tok::RParen,
                Tok::Eof
            ]
        );
        assert_eq!(toks("-7 days"), vec![Tok::Dur(Duration::days(-7)), Tok::Eof]);
        assert_eq!(toks("-1)"), vec![Tok::Int(-1), Tok::RParen, Tok::Eof]);
        assert_eq!(toks("3 then"), vec![Tok::Int(3), Tok::Then, Tok::Eof]);
    }

    #[test]
    fn positions() {
        let t = lex("let a := 1\n  answer a").unwrap();
        assert_eq!(t[5].pos.line, 2);
        assert_eq!(t[5].pos.column, 3);
    }

    #[test]
    fn errors() {
        assert_eq!(lex("\"abc").unwrap_err().kind, TelErrorKind::ParseError);
        assert_eq!(lex("a @ b").unwrap_err().column, 3);
        assert!(lex("12ab").is_err());
    }
}
