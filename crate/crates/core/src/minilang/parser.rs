//! Recursive-descent parser producing the untyped [`Ast`].

use super::ast::*;
use super::lexer::{Token, TokenKind, TokenStream};
use crate::error::{Error, Result};

const MAX_NESTING: usize = 200;

pub fn parse(tokens: &TokenStream) -> Result<Ast> {
    let mut p = Parser {
        tokens: &tokens.tokens,
        pos: 0,
        depth: 0,
    };
    let mut items = Vec::new();
    while !p.at_end() {
        items.push(p.item()?);
    }
    Ok(Ast { items })
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn peek_is(&self, lexeme: &str) -> bool {
        self.peek().is_some_and(|t| {
            t.lexeme == lexeme
                && matches!(
                    t.kind,
                    TokenKind::Keyword | TokenKind::Operator | TokenKind::Punctuation
                )
        })
    }

    fn peek_nth_is(&self, n: usize, lexeme: &str) -> bool {
        self.tokens.get(self.pos + n).is_some_and(|t| t.lexeme == lexeme)
    }

    fn error_here(&self, message: String) -> Error {
        let (line, col) = match self.peek() {
            Some(t) => (t.line, t.col),
            None => self
                .tokens
                .last()
                .map(|t| (t.line, t.col + t.lexeme.chars().count()))
                .unwrap_or((1, 1)),
        };
        Error::Syntax { line, col, message }
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => format!("`{}`", t.lexeme),
            None => "end of input".to_string(),
        }
    }

    fn expect(&mut self, lexeme: &str) -> Result<usize> {
        if self.peek_is(lexeme) {
            self.pos += 1;
            Ok(self.pos - 1)
        } else {
            Err(self.error_here(format!("expected `{lexeme}`, found {}", self.found())))
        }
    }

    fn ident(&mut self) -> Result<Ident> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok(Ident {
                    name: t.lexeme.clone(),
                    token: t.index,
                })
            }
            _ => Err(self.error_here(format!("expected identifier, found {}", self.found()))),
        }
    }

    fn ty(&mut self) -> Result<Type> {
        match self.peek().and_then(|t| Type::from_keyword(&t.lexeme)) {
            Some(ty) => {
                self.pos += 1;
                Ok(ty)
            }
            None => Err(self.error_here(format!("expected a type, found {}", self.found()))),
        }
    }

    fn item(&mut self) -> Result<Item> {
        if self.peek_is("fn") {
            self.function().map(Item::Function)
        } else if self.peek_is("var") {
            self.global().map(Item::Global)
        } else {
            Err(self.error_here(format!(
                "expected `fn` or `var` at top level, found {}",
                self.found()
            )))
        }
    }

    fn global(&mut self) -> Result<GlobalDecl> {
        let first = self.expect("var")?;
        let name = self.ident()?;
        self.expect(":")?;
        let ty = self.ty()?;
        let init = if self.peek_is("=") {
            self.pos += 1;
            Some(self.expr()?)
        } else {
            None
        };
        let last = self.expect(";")?;
        Ok(GlobalDecl {
            name,
            ty,
            init,
            span: Span::new(first, last),
        })
    }

    fn function(&mut self) -> Result<FunctionDecl> {
        let first = self.expect("fn")?;
        let name = self.ident()?;
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.peek_is(")") {
            loop {
                let pname = self.ident()?;
                self.expect(":")?;
                let ty = self.ty()?;
                params.push(Param { name: pname, ty });
                if self.peek_is(",") {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(")")?;
        let ret = if self.peek_is("->") {
            self.pos += 1;
            self.ty()?
        } else {
            Type::Void
        };
        let body = self.block()?;
        let span = Span::new(first, body.span.last);
        Ok(FunctionDecl {
            name,
            params,
            ret,
            body,
            span,
        })
    }

    fn block(&mut self) -> Result<Block> {
        let first = self.expect("{")?;
        self.enter()?;
        let mut stmts = Vec::new();
        while !self.peek_is("}") {
            if self.at_end() {
                return Err(self.error_here("expected `}`, found end of input".into()));
            }
            stmts.push(self.stmt()?);
        }
        self.depth -= 1;
        let last = self.expect("}")?;
        Ok(Block {
            stmts,
            span: Span::new(first, last),
        })
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(self.error_here("nesting too deep".into()));
        }
        Ok(())
    }

    fn stmt(&mut self) -> Result<Stmt> {
        let first = self.pos;
        let kind = if self.peek_is("var") {
            self.pos += 1;
            let name = self.ident()?;
            self.expect(":")?;
            let ty = self.ty()?;
            self.expect("=")?;
            let init = self.expr()?;
            self.expect(";")?;
            StmtKind::Var { name, ty, init }
        } else if self.peek_is("if") {
            return self.if_stmt();
        } else if self.peek_is("while") {
            self.pos += 1;
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let body = self.block()?;
            StmtKind::While { cond, body }
        } else if self.peek_is("return") {
            self.pos += 1;
            let value = if self.peek_is(";") {
                None
            } else {
                Some(self.expr()?)
            };
            self.expect(";")?;
            StmtKind::Return(value)
        } else if self.peek_is("{") {
            StmtKind::Block(self.block()?)
        } else if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier)
            && self.peek_nth_is(1, "=")
        {
            let target = self.ident()?;
            self.expect("=")?;
            let value = self.expr()?;
            self.expect(";")?;
            StmtKind::Assign { target, value }
        } else {
            let e = self.expr()?;
            self.expect(";")?;
            StmtKind::Expr(e)
        };
        Ok(Stmt {
            kind,
            span: Span::new(first, self.pos - 1),
        })
    }

    fn if_stmt(&mut self) -> Result<Stmt> {
        let first = self.expect("if")?;
        self.expect("(")?;
        let cond = self.expr()?;
        self.expect(")")?;
        let then = self.block()?;
        let els = if self.peek_is("else") {
            self.pos += 1;
            if self.peek_is("if") {
                let nested = self.if_stmt()?;
                let span = nested.span;
                Some(Block {
                    stmts: vec![nested],
                    span,
                })
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt {
            kind: StmtKind::If { cond, then, els },
            span: Span::new(first, self.pos - 1),
        })
    }

    pub fn expr(&mut self) -> Result<Expr> {
        self.enter()?;
        let e = self.binary(1);
        self.depth -= 1;
        e
    }

    fn peek_binary(&self) -> Option<BinaryOp> {
        let t = self.peek()?;
        if t.kind != TokenKind::Operator {
            return None;
        }
        BinaryOp::from_lexeme(&t.lexeme)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binary() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let op_token = self.pos;
            self.pos += 1;
            let rhs = self.binary(prec + 1)?;
            let span = Span::new(lhs.span.first, rhs.span.last);
            lhs = Expr {
                kind: ExprKind::Binary {
                    op,
                    op_token,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        let op = if self.peek_is("-") {
            Some(UnaryOp::Neg)
        } else if self.peek_is("!") {
            Some(UnaryOp::Not)
        } else {
            None
        };
        match op {
            Some(op) => {
                let op_token = self.pos;
                self.pos += 1;
                self.enter()?;
                let operand = self.unary();
                self.depth -= 1;
                let operand = operand?;
                let span = Span::new(op_token, operand.span.last);
                Ok(Expr {
                    kind: ExprKind::Unary {
                        op,
                        op_token,
                        operand: Box::new(operand),
                    },
                    span,
                })
            }
            None => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        let Some(t) = self.peek() else {
            return Err(self.error_here("expected expression, found end of input".into()));
        };
        let first = self.pos;
        match t.kind {
            k if k.is_literal() => {
                self.pos += 1;
                Ok(Expr {
                    kind: ExprKind::Literal { token: first },
                    span: Span::single(first),
                })
            }
            TokenKind::Identifier => {
                let name = self.ident()?;
                if self.peek_is("(") {
                    self.pos += 1;
                    let mut args = Vec::new();
                    if !self.peek_is(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.peek_is(",") {
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    let last = self.expect(")")?;
                    Ok(Expr {
                        kind: ExprKind::Call { callee: name, args },
                        span: Span::new(first, last),
                    })
                } else {
                    Ok(Expr {
                        kind: ExprKind::Var(name),
                        span: Span::single(first),
                    })
                }
            }
            TokenKind::Punctuation if t.lexeme == "(" => {
                self.pos += 1;
                let inner = self.expr()?;
                let last = self.expect(")")?;
                Ok(Expr {
                    kind: ExprKind::Paren(Box::new(inner)),
                    span: Span::new(first, last),
                })
            }
            _ => Err(self.error_here(format!("expected expression, found {}", self.found()))),
        }
    }
}
