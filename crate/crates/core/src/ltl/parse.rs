use super::{Formula, LtlError};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Next,
    Until,
    Eventually,
    Globally,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, LtlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |position: usize, message: String| LtlError::Parse { position, message };
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let two = bytes.get(i..i + 2).unwrap_or(&[]);
        let tok = match two {
            b"&&" => Some(Tok::And),
            b"||" => Some(Tok::Or),
            b"->" => Some(Tok::Implies),
            b"[]" => Some(Tok::Globally),
            b"<>" => Some(Tok::Eventually),
            _ => None,
        };
        if let Some(t) = tok {
            out.push((i, t));
            i += 2;
            continue;
        }
        match c {
            b'!' => {
                out.push((i, Tok::Not));
                i += 1;
            }
            b'(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                let t = match word {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "X" => Tok::Next,
                    "U" => Tok::Until,
                    "F" => Tok::Eventually,
                    "G" => Tok::Globally,
                    _ => Tok::Ident(word.to_owned()),
                };
                out.push((start, t));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(err(i, format!("unexpected character {ch:?}")));
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error(&self, message: impl Into<String>) -> LtlError {
        LtlError::Parse { position: self.offset(), message: message.into() }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    // implication: right associative, lowest precedence
    fn implication(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, LtlError> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Tok::Or) {
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, LtlError> {
        let mut lhs = self.until()?;
        while self.eat(&Tok::And) {
            lhs = Formula::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.unary()?;
        if self.eat(&Tok::Until) {
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, LtlError> {
        let Some(t) = self.peek().cloned() else {
            return Err(self.error("unexpected end of formula"));
        };
        self.pos += 1;
        Ok(match t {
            Tok::Not => Formula::not(self.unary()?),
            Tok::Next => Formula::next(self.unary()?),
            Tok::Eventually => Formula::eventually(self.unary()?),
            Tok::Globally => Formula::globally(self.unary()?),
            Tok::True => Formula::True,
            Tok::False => Formula::False,
            Tok::Ident(name) => Formula::atom(name.as_str()),
            Tok::LParen => {
                let inner = self.implication()?;
                if !self.eat(&Tok::RParen) {
                    return Err(self.error("expected ')'"));
                }
                inner
            }
            other => {
                self.pos -= 1;
                return Err(self.error(format!("unexpected token {other:?}")));
            }
        })
    }
}

/// Parses the concrete formula syntax. Precedence from tightest:
/// unary (`!`, `X`, `F`/`<>`, `G`/`[]`), `U`, `&&`, `||`, `->`.
pub fn parse(text: &str) -> Result<Formula, LtlError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, end: text.len() };
    let f = p.implication()?;
    if p.pos != p.toks.len() {
        return Err(p.error("trailing input"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> Formula {
        Formula::atom(s)
    }

    #[test]
    fn phi1() {
        let f = parse("[]( Closed_1 -> !Established_2 )").unwrap();
        assert_eq!(f, Formula::globally(Formula::implies(a("Closed_1"), Formula::not(a("Established_2")))));
    }

    #[test]
    fn phi2_shape() {
        let f = parse("([]<> (Listen_1 && SYNSent_2)) -> <> Established_1").unwrap();
        let want = Formula::implies(
            Formula::globally(Formula::eventually(Formula::and(a("Listen_1"), a("SYNSent_2")))),
            Formula::eventually(a("Established_1")),
        );
        assert_eq!(f, want);
    }

    #[test]
    fn constants_and_precedence() {
        assert_eq!(parse("true").unwrap(), Formula::True);
        assert_eq!(
            parse("a || b && c").unwrap(),
            Formula::or(a("a"), Formula::and(a("b"), a("c")))
        );
        assert_eq!(
            parse("a -> b -> c").unwrap(),
            Formula::implies(a("a"), Formula::implies(a("b"), a("c")))
        );
        assert_eq!(
            parse("!a U b && c").unwrap(),
            Formula::and(Formula::until(Formula::not(a("a")), a("b")), a("c"))
        );
        assert_eq!(parse("F G l").unwrap(), Formula::eventually(Formula::globally(a("l"))));
        assert_eq!(parse("X X p").unwrap(), Formula::next(Formula::next(a("p"))));
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(parse("a &&"), Err(LtlError::Parse { position: 4, .. })));
        assert!(matches!(parse("(a"), Err(LtlError::Parse { position: 2, .. })));
        assert!(matches!(parse("a $ b"), Err(LtlError::Parse { position: 2, .. })));
        assert!(matches!(parse("a b"), Err(LtlError::Parse { position: 2, .. })));
        assert!(parse("").is_err());
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "[](Closed_1 -> !Established_2)",
            "([]<>(Listen_1 && SYNSent_2)) -> <>Established_1",
            "(a U (b U c)) || X !(d && e)",
            "((a -> b) -> c) && true && !false",
        ] {
            let f = parse(text).unwrap();
            assert_eq!(parse(&f.to_string()).unwrap(), f, "{text}");
        }
    }
}
