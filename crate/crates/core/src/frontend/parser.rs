use std::collections::BTreeSet;

use super::ast::*;
use super::lexer::{tokenize, Tok};
use super::{ParseError, ParseErrorKind};
use crate::formula::{Binder, Formula, Sort};

/// Result of the shared term/formula grammar: a plain term, or something
/// only a formula can be (quantifier, implication, `true`/`false`).
enum Node {
    E(Expr),
    F(Formula),
}

impl Node {
    fn into_formula(self) -> Formula {
        match self {
            Node::E(e) => Formula::from_expr(&e),
            Node::F(f) => f,
        }
    }
}

pub struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: tokenize(src)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(ParseErrorKind::Syntax, self.pos(), msg)
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}, found {}", self.peek().describe())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<Ident, ParseError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.advance();
                Ok(x)
            }
            other => Err(self.error(format!("expected {what}, found {}", other.describe()))),
        }
    }

    pub fn expect_eof(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(format!("unexpected {}", self.peek().describe())))
        }
    }

    pub fn library(&mut self) -> Result<Library, ParseError> {
        let mut globals: Vec<GlobalDecl> = Vec::new();
        let mut procedures: Vec<Procedure> = Vec::new();
        let mut seen: BTreeSet<Ident> = BTreeSet::new();
        while *self.peek() != Tok::Eof {
            let pos = self.pos();
            if *self.peek() == Tok::Var {
                let g = self.global()?;
                if !seen.insert(g.name.clone()) {
                    return Err(duplicate(pos, &g.name));
                }
                globals.push(g);
            } else {
                let p = self.procedure()?;
                if !seen.insert(p.name.clone()) {
                    return Err(duplicate(pos, &p.name));
                }
                procedures.push(p);
            }
        }
        if procedures.is_empty() {
            return Err(self.error("a library needs at least one procedure"));
        }
        Ok(Library {
            globals,
            procedures,
        })
    }

    fn global(&mut self) -> Result<GlobalDecl, ParseError> {
        let pos = self.pos();
        self.expect(&Tok::Var, "`var`")?;
        let name = self.ident("global name")?;
        self.expect(&Tok::Colon, "`:`")?;
        let kind = match self.sort()? {
            Sort::Int => GlobalKind::Scalar,
            Sort::Array1 => GlobalKind::Array1,
            Sort::Array2 => GlobalKind::Array2,
        };
        self.expect(&Tok::Assign, "`:=`")?;
        let init = self.int_literal()?;
        self.expect(&Tok::Semi, "`;`")?;
        Ok(GlobalDecl {
            name,
            kind,
            init,
            pos,
        })
    }

    fn sort(&mut self) -> Result<Sort, ParseError> {
        if self.eat(&Tok::Int) {
            return Ok(Sort::Int);
        }
        self.expect(&Tok::LBracket, "a type")?;
        self.expect(&Tok::Int, "`int`")?;
        let two = self.eat(&Tok::Comma);
        if two {
            self.expect(&Tok::Int, "`int`")?;
        }
        self.expect(&Tok::RBracket, "`]`")?;
        self.expect(&Tok::Int, "`int`")?;
        Ok(if two { Sort::Array2 } else { Sort::Array1 })
    }

    fn int_literal(&mut self) -> Result<i128, ParseError> {
        let neg = self.eat(&Tok::Op("-"));
        match self.advance() {
            Tok::Num(n) => Ok(if neg { -n } else { n }),
            other => Err(self.error(format!(
                "expected an integer constant, found {}",
                other.describe()
            ))),
        }
    }

    fn procedure(&mut self) -> Result<Procedure, ParseError> {
        let pos = self.pos();
        self.eat(&Tok::Proc);
        let name = self.ident("procedure name")?;
        self.expect(&Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let ppos = self.pos();
                let x = self.ident("parameter name")?;
                if params.contains(&x) {
                    return Err(duplicate(ppos, &x));
                }
                params.push(x);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(&Tok::Comma, "`,` or `)`")?;
            }
        }
        let invariant = if self.eat(&Tok::Invariant) {
            let f = self.formula()?;
            self.expect(&Tok::Semi, "`;` after invariant")?;
            Some(f)
        } else {
            None
        };
        let body = self.block()?;
        Ok(Procedure {
            name,
            params,
            invariant,
            body,
            pos,
        })
    }

    fn block(&mut self) -> Result<Stmt, ParseError> {
        self.expect(&Tok::LBrace, "`{`")?;
        let mut items = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if *self.peek() == Tok::Eof {
                return Err(self.error("unclosed block"));
            }
            items.push(self.stmt()?);
        }
        Ok(Stmt::seq(items))
    }

    fn end_stmt(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RBrace {
            self.eat(&Tok::Semi);
            return Ok(());
        }
        self.expect(&Tok::Semi, "`;`")
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::If => self.if_stmt(),
            Tok::Return => {
                self.advance();
                let var = self.ident("return variable")?;
                self.end_stmt()?;
                Ok(Stmt::Return { var, pos })
            }
            Tok::Ident(x) => {
                self.advance();
                if self.eat(&Tok::LBracket) {
                    let idx = self.expr_list(&Tok::RBracket)?;
                    self.expect(&Tok::Assign, "`:=`")?;
                    let rhs = self.expr()?;
                    self.end_stmt()?;
                    return Ok(Stmt::Assign {
                        lhs: LValue::Cell(x, idx),
                        rhs,
                        pos,
                    });
                }
                self.expect(&Tok::Assign, "`:=`")?;
                let is_call = matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::LParen;
                let start = self.at;
                if is_call {
                    let callee = self.ident("procedure name")?;
                    self.advance();
                    let args = self.expr_list(&Tok::RParen)?;
                    // `x := q(a) + 1` is an expression containing a call, not a call.
                    if matches!(self.peek(), Tok::Semi | Tok::RBrace) {
                        self.end_stmt()?;
                        return Ok(Stmt::Call {
                            lhs: x,
                            callee,
                            args,
                            pos,
                        });
                    }
                    self.at = start;
                }
                let rhs = self.expr()?;
                self.end_stmt()?;
                Ok(Stmt::Assign {
                    lhs: LValue::Var(x),
                    rhs,
                    pos,
                })
            }
            other => Err(self.error(format!("expected a statement, found {}", other.describe()))),
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.pos();
        self.expect(&Tok::If, "`if`")?;
        self.expect(&Tok::LParen, "`(`")?;
        let cond = self.expr()?;
        self.expect(&Tok::RParen, "`)`")?;
        let then_branch = self.block()?;
        let else_branch = if self.eat(&Tok::Else) {
            if *self.peek() == Tok::If {
                self.if_stmt()?
            } else {
                self.block()?
            }
        } else {
            Stmt::Skip
        };
        Ok(Stmt::If {
            cond,
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
            pos,
        })
    }

    fn expr_list(&mut self, close: &Tok) -> Result<Vec<Expr>, ParseError> {
        let mut out = Vec::new();
        if self.eat(close) {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat(close) {
                return Ok(out);
            }
            self.expect(&Tok::Comma, "`,`")?;
        }
    }

    /// A program expression (no quantifiers or implications).
    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.node(0)? {
            Node::E(e) => Ok(e),
            Node::F(Formula::True) => Ok(Expr::Int(1)),
            Node::F(Formula::False) => Ok(Expr::Int(0)),
            Node::F(_) => Err(ParseError::new(
                ParseErrorKind::Syntax,
                pos,
                "quantifiers and `==>` are only allowed in formulas",
            )),
        }
    }

    pub fn formula(&mut self) -> Result<Formula, ParseError> {
        Ok(self.node(0)?.into_formula())
    }

    fn node(&mut self, min_prec: u8) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op("==>") => None,
                Tok::Op(s) => match binop(s) {
                    Some(op) => Some(op),
                    None => break,
                },
                _ => break,
            };
            let prec = op.map_or(1, BinOp::precedence);
            if prec < min_prec {
                break;
            }
            let pos = self.pos();
            self.advance();
            lhs = match op {
                None => {
                    // Right-associative.
                    let rhs = self.node(1)?;
                    Node::F(Formula::implies(lhs.into_formula(), rhs.into_formula()))
                }
                Some(op) => {
                    let rhs = self.node(prec + 1)?;
                    combine(op, lhs, rhs, pos)?
                }
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        let pos = self.pos();
        if self.eat(&Tok::Op("!")) {
            return Ok(match self.unary()? {
                Node::E(e) => Node::E(Expr::not(e)),
                Node::F(f) => Node::F(Formula::not(f)),
            });
        }
        if self.eat(&Tok::Op("-")) {
            if let Tok::Num(n) = *self.peek() {
                self.advance();
                return self.postfix(Node::E(Expr::Int(-n)));
            }
            return match self.unary()? {
                Node::E(e) => Ok(Node::E(Expr::Unary(UnOp::Neg, Box::new(e)))),
                Node::F(_) => Err(ParseError::new(
                    ParseErrorKind::Syntax,
                    pos,
                    "cannot negate a formula arithmetically",
                )),
            };
        }
        let prim = self.primary()?;
        self.postfix(prim)
    }

    fn postfix(&mut self, mut node: Node) -> Result<Node, ParseError> {
        while *self.peek() == Tok::LBracket {
            let base = match node {
                Node::E(e) => e,
                Node::F(_) => return Err(self.error("cannot index a formula")),
            };
            self.advance();
            let mut idx = vec![self.expr()?];
            loop {
                if self.eat(&Tok::Comma) {
                    idx.push(self.expr()?);
                    continue;
                }
                if self.eat(&Tok::Assign) {
                    let v = self.expr()?;
                    self.expect(&Tok::RBracket, "`]`")?;
                    node = Node::E(Expr::Store(Box::new(base), idx, Box::new(v)));
                    break;
                }
                self.expect(&Tok::RBracket, "`]`")?;
                node = Node::E(Expr::Select(Box::new(base), idx));
                break;
            }
        }
        Ok(node)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        match self.advance() {
            Tok::Num(n) => Ok(Node::E(Expr::Int(n))),
            Tok::True => Ok(Node::F(Formula::True)),
            Tok::False => Ok(Node::F(Formula::False)),
            Tok::Ident(x) => {
                if self.eat(&Tok::LParen) {
                    let args = self.expr_list(&Tok::RParen)?;
                    Ok(Node::E(Expr::App(x, args)))
                } else {
                    Ok(Node::E(Expr::Var(x)))
                }
            }
            Tok::LParen => {
                let inner = self.node(0)?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(inner)
            }
            q @ (Tok::Exists | Tok::Forall) => {
                let mut binders = Vec::new();
                loop {
                    let name = self.ident("bound variable")?;
                    let sort = if self.eat(&Tok::Colon) {
                        self.sort()?
                    } else {
                        Sort::Int
                    };
                    binders.push(Binder::new(name, sort));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::Dot, "`.` after quantified variables")?;
                let body = Box::new(self.node(0)?.into_formula());
                Ok(Node::F(if q == Tok::Exists {
                    Formula::Exists(binders, body)
                } else {
                    Formula::Forall(binders, body)
                }))
            }
            other => {
                self.at -= 1;
                Err(self.error(format!("expected an expression, found {}", other.describe())))
            }
        }
    }
}

fn duplicate(pos: Pos, name: &str) -> ParseError {
    ParseError::new(
        ParseErrorKind::Duplicate,
        pos,
        format!("`{name}` is declared more than once"),
    )
}

fn binop(s: &str) -> Option<BinOp> {
    Some(match s {
        "+" => BinOp::Add,
        "-" => BinOp::Sub,
        "*" => BinOp::Mul,
        "/" => BinOp::Div,
        "%" => BinOp::Mod,
        "<" => BinOp::Lt,
        "<=" => BinOp::Le,
        ">" => BinOp::Gt,
        ">=" => BinOp::Ge,
        "==" => BinOp::Eq,
        "!=" => BinOp::Ne,
        "&&" => BinOp::And,
        "||" => BinOp::Or,
        _ => return None,
    })
}

fn combine(op: BinOp, lhs: Node, rhs: Node, pos: Pos) -> Result<Node, ParseError> {
    match (lhs, rhs) {
        (Node::E(l), Node::E(r)) => Ok(Node::E(Expr::bin(op, l, r))),
        (l, r) if op == BinOp::And => Ok(Node::F(Formula::conj(vec![l.into_formula(), r.into_formula()]))),
        (l, r) if op == BinOp::Or => Ok(Node::F(Formula::disj(vec![l.into_formula(), r.into_formula()]))),
        _ => Err(ParseError::new(
            ParseErrorKind::Syntax,
            pos,
            format!("operator `{}` needs integer operands, not formulas", op.symbol()),
        )),
    }
}
