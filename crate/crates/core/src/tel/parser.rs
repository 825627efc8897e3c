use crate::temporal::Weekday;

use super::ast::{Binding, Expr, ExprKind, Program};
use super::lexer::{lex, Pos, Tok, Token};
use super::{TelError, TelErrorKind};

/// Parses program text. `#` starts a comment that runs to the end of the line.
pub fn parse_program(source: &str) -> Result<Program, TelError> {
    let tokens = lex(source)?;
    Parser { src: source, tokens, i: 0 }.program()
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    i: usize,
}

fn err(pos: Pos, message: impl Into<String>) -> TelError {
    TelError::new(TelErrorKind::ParseError, pos, message)
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.i]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.i].clone();
        if self.i + 1 < self.tokens.len() {
            self.i += 1;
        }
        t
    }

    fn prev_end(&self) -> usize {
        self.i.checked_sub(1).map_or(0, |p| self.tokens[p].end)
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.next();
        }
    }

    fn program(mut self) -> Result<Program, TelError> {
        let mut bindings = Vec::new();
        self.skip_newlines();
        loop {
            let t = self.peek().clone();
            match t.tok {
                Tok::Let => {
                    bindings.push(self.binding()?);
                    let after = self.next();
                    match after.tok {
                        Tok::Newline => {}
                        Tok::Eof => {
                            return Err(err(after.pos, "program ends without an 'answer' line"))
                        }
                        Tok::RParen => return Err(err(after.pos, "unmatched ')'")),
                        other => {
                            return Err(err(
                                after.pos,
                                format!("expected end of line, found {}", other.describe()),
                            ))
                        }
                    }
                    self.skip_newlines();
                }
                Tok::Answer => {
                    self.next();
                    let answer = self.expr()?;
                    self.skip_newlines();
                    let trailing = self.peek();
                    return match &trailing.tok {
                        Tok::Eof => Ok(Program { bindings, answer }),
                        Tok::RParen => Err(err(trailing.pos, "unmatched ')'")),
                        other => Err(err(
                            trailing.pos,
                            format!("unexpected {} after the answer line", other.describe()),
                        )),
                    };
                }
                Tok::Eof => return Err(err(t.pos, "program has no 'answer' line")),
                other => {
                    return Err(err(
                        t.pos,
                        format!("expected 'let' or 'answer', found {}", other.describe()),
                    ))
                }
            }
        }
    }

    fn binding(&mut self) -> Result<Binding, TelError> {
        let let_tok = self.next();
        let name_tok = self.next();
        let name = match name_tok.tok {
            Tok::Ident(n) if Weekday::from_code(&n).is_some() => {
                return Err(err(name_tok.pos, format!("'{n}' is a reserved weekday name")))
            }
            Tok::Ident(n) => n,
            other => {
                return Err(err(
                    name_tok.pos,
                    format!("expected a name after 'let', found {}", other.describe()),
                ))
            }
        };
        let assign = self.next();
        if assign.tok != Tok::Assign {
            return Err(err(assign.pos, format!("expected ':=', found {}", assign.tok.describe())));
        }
        let start = self.peek().pos.offset;
        let expr = self.expr()?;
        let source = self.src[start..self.prev_end()].trim().to_string();
        Ok(Binding { name, expr, pos: let_tok.pos, source })
    }

    fn expr(&mut self) -> Result<Expr, TelError> {
        let t = self.next();
        let kind = match t.tok {
            Tok::Int(n) => ExprKind::Int(n),
            Tok::Str(s) => ExprKind::Str(s),
            Tok::Dur(d) => ExprKind::Duration(d),
            Tok::Ident(name) => {
                if let Some(w) = Weekday::from_code(&name) {
                    ExprKind::Weekday(w)
                } else if self.peek().tok == Tok::LParen {
                    let open = self.next();
                    let args = self.args(open.pos)?;
                    ExprKind::Call { name, args }
                } else {
                    ExprKind::Var(name)
                }
            }
            Tok::If => {
                let cond = self.expr()?;
                self.expect(Tok::Then)?;
                let then = self.expr()?;
                self.expect(Tok::Else)?;
                let otherwise = self.expr()?;
                ExprKind::If { cond: Box::new(cond), then: Box::new(then), otherwise: Box::new(otherwise) }
            }
            Tok::RParen => return Err(err(t.pos, "unmatched ')'")),
            other => {
                return Err(err(t.pos, format!("expected an expression, found {}", other.describe())))
            }
        };
        Ok(Expr { kind, pos: t.pos })
    }

    fn args(&mut self, open: Pos) -> Result<Vec<Expr>, TelError> {
        let unclosed = || {
            err(open, format!("'(' opened at line {}, column {} is never closed", open.line, open.column))
        };
        let mut args = Vec::new();
        if self.peek().tok == Tok::RParen {
            self.next();
            return Ok(args);
        }
        loop {
            if matches!(self.peek().tok, Tok::Newline | Tok::Eof) {
                return Err(unclosed());
            }
            args.push(self.expr()?);
            let t = self.next();
            match t.tok {
                Tok::Comma => {}
                Tok::RParen => return Ok(args),
                Tok::Newline | Tok::Eof => return Err(unclosed()),
                other => {
                    return Err(err(t.pos, format!("expected ',' or ')', found {}", other.describe())))
                }
            }
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), TelError> {
        let t = self.next();
        if t.tok == want {
            Ok(())
        } else {
            Err(err(t.pos, format!("expected {}, found {}", want.describe(), t.tok.describe())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::Duration;

    #[test]
    fn minimal_program() {
        let p = parse_program("let a := date(2020,3,12)\nanswer a").unwrap();
        assert_eq!(p.bindings.len(), 1);
        assert_eq!(p.bindings[0].name, "a");
        assert_eq!(p.bindings[0].source, "date(2020,3,12)");
        assert_eq!(p.answer.kind, ExprKind::Var("a".into()));
    }

    #[test]
    fn unclosed_bracket_reports_its_line() {
        let e = parse_program("let a := date(2020,3,12\nanswer a").unwrap_err();
        assert_eq!(e.kind, TelErrorKind::ParseError);
        assert_eq!(e.line, 1);
        assert_eq!(e.column, 14);
    }

    #[test]
    fn comments_and_blank_lines() {
        let src = "# header\n\nlet x := 3 days  # trailing\n\nanswer x\n\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.bindings[0].expr.kind, ExprKind::Duration(Duration::days(3)));
    }

    #[test]
    fn conditional_and_weekdays() {
        let p = parse_program(
            "answer if before(date(2020,1,1), date(2020,2,1)) then \"A\" else \"B\"",
        )
        .unwrap();
        assert!(matches!(p.answer.kind, ExprKind::If { .. }));
        let p = parse_program("answer next_weekday(d, FR, -1)").unwrap();
        let ExprKind::Call { args, .. } = &p.answer.kind else { panic!() };
        assert_eq!(args[1].kind, ExprKind::Weekday(Weekday::Fri));
        assert_eq!(args[2].kind, ExprKind::Int(-1));
    }

    #[test]
    fn malformed_programs() {
        let cases = [
            ("let a := date(2020,3,12))\nanswer a", 1),
            ("let a := \nanswer a", 1),
            ("let a = 3\nanswer a", 1),
            ("let a := 1\n", 2),
            ("answer a\nlet b := 1", 2),
            ("let FR := 1\nanswer FR", 1),
            ("answer f(a b)", 1),
            ("answer if a then b", 1),
            ("", 1),
        ];
        for (src, line) in cases {
            let e = parse_program(src).unwrap_err();
            assert_eq!(e.kind, TelErrorKind::ParseError, "{src:?}");
            assert_eq!(e.line, line, "{src:?}: {e}");
        }
    }

    #[test]
    fn printing_round_trips() {
        let src = "let s:=date(2020,3,16)\nlet w := week_range( sub(s, 1 week) )\nanswer if same_day(w, week_range(date(2020,3,11))) then \"C\" else \"say \\\"E\\\"\"";
        let p = parse_program(src).unwrap();
        let printed = p.to_string();
        assert_eq!(parse_program(&printed).unwrap(), p);
        assert!(printed.contains("sub(s, 7 days)"));
    }
}
