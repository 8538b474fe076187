use super::{BinOp, Expr, ExprError, Func};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(x) => format!("number {x}"),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Op(c) => format!("'{c}'"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::End => "end of input".into(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| ExprError::Syntax {
                message: format!("malformed number '{text}'"),
                line: tl,
                column: tc,
            })?;
            Tok::Num(value)
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                other => {
                    return Err(ExprError::Syntax {
                        message: format!("unexpected character '{other}'"),
                        line: tl,
                        column: tc,
                    })
                }
            }
        };
        col += i - start;
        out.push(Token {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

/// Name resolution for [`parse_with`].
#[derive(Debug, Clone, Default)]
pub struct Symbols {
    /// Aliases for state components; `variables[i]` names `u{i+1}`.
    pub variables: Vec<String>,
    /// Known parameter names.
    pub params: Vec<String>,
    /// State dimension; `u{k}` with `k > n` is rejected.
    pub n: usize,
}

impl Symbols {
    pub fn new(n: usize, variables: &[String], params: &[String]) -> Self {
        Symbols {
            variables: variables.to_vec(),
            params: params.to_vec(),
            n,
        }
    }
}

fn state_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('u')?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse::<usize>().ok().map(|k| k - 1)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    symbols: Option<&'a Symbols>,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Token, message: String) -> ExprError {
        ExprError::Syntax {
            message,
            line: t.line,
            column: t.column,
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ExprError> {
        let t = self.next();
        if t.tok == want {
            Ok(())
        } else {
            Err(self.error_at(&t, format!("expected {}, found {}", describe(&want), describe(&t.tok))))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.power()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.power()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.unary()?;
        if self.peek().tok != Tok::Op('^') {
            return Ok(base);
        }
        self.next();
        let at = self.peek().clone();
        let exponent = self.power()?;
        if !exponent.is_state_free() {
            return Err(self.error_at(&at, "exponent must not depend on the state".into()));
        }
        Ok(Expr::Pow(Box::new(base), Box::new(exponent)))
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek().tok {
            Tok::Op('-') => {
                self.next();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.next();
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let t = self.next();
        match &t.tok {
            Tok::Num(x) => Ok(Expr::Const(*x)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(name) {
                    self.expect(Tok::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::Func(func, Box::new(arg)));
                }
                self.resolve(name, &t)
            }
            other => Err(self.error_at(&t, format!("unexpected {}", describe(other)))),
        }
    }

    fn resolve(&self, name: &str, t: &Token) -> Result<Expr, ExprError> {
        let unknown = || ExprError::UnknownIdentifier {
            name: name.to_string(),
            line: t.line,
            column: t.column,
        };
        let Some(symbols) = self.symbols else {
            return Ok(match state_index(name) {
                Some(i) => Expr::Var(i),
                None => Expr::Param(name.to_string()),
            });
        };
        if let Some(i) = symbols.variables.iter().position(|v| v == name) {
            return Ok(Expr::Var(i));
        }
        if symbols.params.iter().any(|p| p == name) {
            return Ok(Expr::Param(name.to_string()));
        }
        match state_index(name) {
            Some(i) if i < symbols.n => Ok(Expr::Var(i)),
            _ => Err(unknown()),
        }
    }
}

fn run(src: &str, symbols: Option<&Symbols>) -> Result<Expr, ExprError> {
    let mut p = Parser {
        tokens: lex(src)?,
        pos: 0,
        symbols,
    };
    let e = p.expr()?;
    let t = p.next();
    if t.tok != Tok::End {
        return Err(p.error_at(&t, format!("unexpected {}", describe(&t.tok))));
    }
    Ok(e)
}

/// Parses without a symbol table: `u<k>` is a state component, any other
/// identifier a parameter bound at evaluation time.
pub fn parse(src: &str) -> Result<Expr, ExprError> {
    run(src, None)
}

/// Parses with declared aliases and parameters; anything else is an
/// unknown-identifier error.
pub fn parse_with(src: &str, symbols: &Symbols) -> Result<Expr, ExprError> {
    run(src, Some(symbols))
}
