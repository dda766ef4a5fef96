use super::flatten::FlatDesign;
use super::lexer::{tokenize, Tok, Token};
use super::syntax::*;
use super::HwGraphError;

/// Parsed design: every module declaration plus the chosen top module.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseTree {
    pub modules: Vec<ModuleDef>,
    pub top: String,
}

impl ParseTree {
    pub fn module(&self, name: &str) -> Option<&ModuleDef> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn top_module(&self) -> &ModuleDef {
        self.module(&self.top).expect("top module is validated at parse time")
    }
}

const KEYWORDS: &[&str] = &[
    "module",
    "endmodule",
    "input",
    "output",
    "inout",
    "wire",
    "reg",
    "integer",
    "signed",
    "parameter",
    "localparam",
    "assign",
    "always",
    "initial",
    "begin",
    "end",
    "if",
    "else",
    "case",
    "casex",
    "casez",
    "endcase",
    "default",
    "posedge",
    "negedge",
    "or",
    "and",
    "nand",
    "nor",
    "xor",
    "xnor",
    "not",
    "buf",
];

/// Keywords outside the supported subset, mapped to the construct name
/// reported in the error.
const UNSUPPORTED: &[(&str, &str)] = &[
    ("generate", "generate"),
    ("endgenerate", "generate"),
    ("genvar", "genvar"),
    ("function", "function"),
    ("endfunction", "function"),
    ("task", "task"),
    ("endtask", "task"),
    ("specify", "specify"),
    ("endspecify", "specify"),
    ("specparam", "specify"),
    ("event", "event"),
    ("for", "loop"),
    ("while", "loop"),
    ("repeat", "loop"),
    ("forever", "loop"),
    ("fork", "fork"),
    ("join", "fork"),
    ("wait", "wait"),
    ("disable", "disable"),
    ("real", "real"),
    ("realtime", "real"),
    ("time", "time"),
    ("tri", "tri net"),
    ("wand", "wired net"),
    ("wor", "wired net"),
    ("supply0", "supply net"),
    ("supply1", "supply net"),
    ("primitive", "user-defined primitive"),
    ("table", "user-defined primitive"),
    ("always_ff", "SystemVerilog"),
    ("always_comb", "SystemVerilog"),
    ("always_latch", "SystemVerilog"),
    ("logic", "SystemVerilog"),
    ("interface", "SystemVerilog"),
    ("typedef", "SystemVerilog"),
];

/// Parses the flattened design text.
pub fn parse_verilog(flat: &FlatDesign) -> Result<ParseTree, HwGraphError> {
    let tokens = tokenize(&flat.text)?;
    let mut p = Parser { toks: tokens, pos: 0 };
    let mut modules = Vec::new();
    while !p.at_eof() {
        modules.push(p.module()?);
    }
    if !modules.iter().any(|m| m.name == flat.top_module) {
        return Err(HwGraphError::UnknownTopModule(flat.top_module.clone()));
    }
    Ok(ParseTree {
        modules,
        top: flat.top_module.clone(),
    })
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> HwGraphError {
        let (line, col) = self.here();
        HwGraphError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn unsupported(&self, construct: &str) -> HwGraphError {
        let (line, col) = self.here();
        HwGraphError::UnsupportedConstruct {
            construct: construct.to_string(),
            line,
            col,
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), HwGraphError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", describe(self.peek()))))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), HwGraphError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`, found {}", describe(self.peek()))))
        }
    }

    fn check_supported(&self) -> Result<(), HwGraphError> {
        match self.peek() {
            Tok::Ident(w) => {
                if let Some((_, construct)) = UNSUPPORTED.iter().find(|(k, _)| k == w) {
                    return Err(self.unsupported(construct));
                }
            }
            Tok::Directive(d) => return Err(self.unsupported(&format!("compiler directive {d}"))),
            Tok::SysIdent(s) => return Err(self.unsupported(&format!("system task {s}"))),
            Tok::Sym("#") => return Err(self.unsupported("delay")),
            _ => {}
        }
        Ok(())
    }

    fn ident(&mut self) -> Result<String, HwGraphError> {
        self.check_supported()?;
        match self.peek().clone() {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.bump();
                Ok(name)
            }
            other => Err(self.error(format!("expected identifier, found {}", describe(&other)))),
        }
    }

    fn module(&mut self) -> Result<ModuleDef, HwGraphError> {
        self.check_supported()?;
        let line = self.here().0;
        self.expect_kw("module")?;
        let name = self.ident()?;
        let mut params = Vec::new();
        if self.eat_sym("#") {
            self.expect_sym("(")?;
            loop {
                let local = if self.eat_kw("localparam") {
                    true
                } else {
                    self.eat_kw("parameter");
                    false
                };
                let decl = self.param_body(local, &[",", ")"])?;
                params.push(decl);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
        }
        let ports = if self.eat_sym("(") {
            let ports = self.port_header()?;
            self.expect_sym(")")?;
            ports
        } else {
            Vec::new()
        };
        self.expect_sym(";")?;
        let mut items = Vec::new();
        while !self.is_kw("endmodule") {
            if self.at_eof() {
                return Err(self.error("missing `endmodule`"));
            }
            items.push(self.item()?);
        }
        self.bump();
        Ok(ModuleDef {
            name,
            params,
            ports,
            items,
            line,
        })
    }

    fn direction(&self) -> Option<Direction> {
        match self.peek() {
            Tok::Ident(w) if w == "input" => Some(Direction::Input),
            Tok::Ident(w) if w == "output" => Some(Direction::Output),
            Tok::Ident(w) if w == "inout" => Some(Direction::Inout),
            _ => None,
        }
    }

    fn port_header(&mut self) -> Result<Vec<PortHeader>, HwGraphError> {
        let mut ports = Vec::new();
        if self.is_sym(")") {
            return Ok(ports);
        }
        let mut current: Option<PortDecl> = None;
        loop {
            if self.direction().is_some() {
                if let Some(d) = current.take() {
                    ports.push(PortHeader::Ansi(d));
                }
                let mut decl = self.port_decl_head()?;
                decl.names.push(self.ident()?);
                current = Some(decl);
            } else {
                let name = self.ident()?;
                match current.as_mut() {
                    Some(decl) => decl.names.push(name),
                    None => ports.push(PortHeader::Named(name)),
                }
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        if let Some(d) = current {
            ports.push(PortHeader::Ansi(d));
        }
        Ok(ports)
    }

    fn port_decl_head(&mut self) -> Result<PortDecl, HwGraphError> {
        let dir = self.direction().expect("caller checked direction");
        self.bump();
        self.check_supported()?;
        let net = if self.eat_kw("wire") {
            Some(NetKind::Wire)
        } else if self.eat_kw("reg") {
            Some(NetKind::Reg)
        } else if self.eat_kw("integer") {
            Some(NetKind::Integer)
        } else {
            None
        };
        let signed = self.eat_kw("signed");
        let range = self.opt_range()?;
        Ok(PortDecl {
            dir,
            net,
            signed,
            range,
            names: Vec::new(),
        })
    }

    fn opt_range(&mut self) -> Result<Option<Range>, HwGraphError> {
        if !self.eat_sym("[") {
            return Ok(None);
        }
        let msb = self.expr()?;
        self.expect_sym(":")?;
        let lsb = self.expr()?;
        self.expect_sym("]")?;
        Ok(Some(Range { msb, lsb }))
    }

    fn param_body(&mut self, local: bool, terminators: &[&str]) -> Result<ParamDecl, HwGraphError> {
        self.eat_kw("signed");
        self.eat_kw("integer");
        let range = self.opt_range()?;
        let mut assigns = Vec::new();
        loop {
            let name = self.ident()?;
            self.expect_sym("=")?;
            assigns.push((name, self.expr()?));
            // In a header list `, parameter x = 1` starts a new declaration.
            if self.is_sym(",") && matches!(self.peek_at(1), Tok::Ident(w) if !w.starts_with("parameter") && !w.starts_with("localparam"))
                && matches!(self.peek_at(2), Tok::Sym("="))
            {
                self.bump();
                continue;
            }
            if terminators.iter().any(|t| self.is_sym(t)) {
                break;
            }
            return Err(self.error(format!("unexpected {} in parameter declaration", describe(self.peek()))));
        }
        Ok(ParamDecl { local, range, assigns })
    }

    fn item(&mut self) -> Result<ModuleItem, HwGraphError> {
        self.check_supported()?;
        if self.direction().is_some() {
            let mut decl = self.port_decl_head()?;
            loop {
                decl.names.push(self.ident()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(";")?;
            return Ok(ModuleItem::Port(decl));
        }
        let word = match self.peek() {
            Tok::Ident(w) => w.clone(),
            other => return Err(self.error(format!("expected module item, found {}", describe(other)))),
        };
        match word.as_str() {
            "wire" | "reg" | "integer" => {
                self.bump();
                let kind = match word.as_str() {
                    "wire" => NetKind::Wire,
                    "reg" => NetKind::Reg,
                    _ => NetKind::Integer,
                };
                let signed = self.eat_kw("signed");
                let range = self.opt_range()?;
                let mut vars = Vec::new();
                loop {
                    let name = self.ident()?;
                    let mut dims = Vec::new();
                    while let Some(r) = self.opt_range()? {
                        dims.push(r);
                    }
                    let init = if self.eat_sym("=") { Some(self.expr()?) } else { None };
                    vars.push(NetVar { name, dims, init });
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")?;
                Ok(ModuleItem::Net(NetDecl {
                    kind,
                    signed,
                    range,
                    vars,
                }))
            }
            "parameter" | "localparam" => {
                self.bump();
                let decl = self.param_body(word == "localparam", &[";"])?;
                self.expect_sym(";")?;
                Ok(ModuleItem::Param(decl))
            }
            "assign" => {
                self.bump();
                self.check_supported()?;
                let mut pairs = Vec::new();
                loop {
                    let lhs = self.lvalue()?;
                    self.expect_sym("=")?;
                    pairs.push((lhs, self.expr()?));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")?;
                Ok(ModuleItem::Assign(pairs))
            }
            "always" => {
                self.bump();
                if !self.is_sym("@") {
                    return Err(self.unsupported("always without sensitivity list"));
                }
                let sens = self.sensitivity()?;
                let body = self.stmt()?;
                Ok(ModuleItem::Always(Always { sens, body }))
            }
            "initial" => {
                self.bump();
                Ok(ModuleItem::Initial(self.stmt()?))
            }
            _ if Gate::from_keyword(&word).is_some() => self.instances(Gate::from_keyword(&word)),
            _ if KEYWORDS.contains(&word.as_str()) => {
                Err(self.error(format!("unexpected keyword `{word}` in module body")))
            }
            _ => self.instances(None),
        }
    }

    fn instances(&mut self, gate: Option<Gate>) -> Result<ModuleItem, HwGraphError> {
        let line = self.here().0;
        let module = match self.bump() {
            Tok::Ident(w) => w,
            _ => unreachable!("caller checked identifier"),
        };
        let mut params = Vec::new();
        if self.is_sym("#") {
            if gate.is_some() || !matches!(self.peek_at(1), Tok::Sym("(")) {
                return Err(self.unsupported("delay"));
            }
            self.bump();
            params = self.connections()?;
        }
        let mut instances = Vec::new();
        loop {
            let name = if matches!(self.peek(), Tok::Ident(_)) {
                Some(self.ident()?)
            } else {
                None
            };
            if name.is_none() && gate.is_none() {
                return Err(self.error("module instance requires a name"));
            }
            if self.is_sym("[") {
                return Err(self.unsupported("instance array"));
            }
            let conns = self.connections()?;
            instances.push(Instance { name, conns });
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")?;
        Ok(ModuleItem::Instances(InstanceList {
            module,
            gate,
            params,
            instances,
            line,
        }))
    }

    fn connections(&mut self) -> Result<Vec<Connection>, HwGraphError> {
        self.expect_sym("(")?;
        let mut conns = Vec::new();
        if self.eat_sym(")") {
            return Ok(conns);
        }
        loop {
            if self.eat_sym(".") {
                let port = self.ident()?;
                self.expect_sym("(")?;
                let expr = if self.is_sym(")") { None } else { Some(self.expr()?) };
                self.expect_sym(")")?;
                conns.push(Connection { port: Some(port), expr });
            } else if self.is_sym(",") || self.is_sym(")") {
                conns.push(Connection { port: None, expr: None });
            } else {
                conns.push(Connection {
                    port: None,
                    expr: Some(self.expr()?),
                });
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(")")?;
        Ok(conns)
    }

    fn sensitivity(&mut self) -> Result<Sensitivity, HwGraphError> {
        self.expect_sym("@")?;
        if self.eat_sym("*") {
            return Ok(Sensitivity::Star);
        }
        self.expect_sym("(")?;
        if self.eat_sym("*") {
            self.expect_sym(")")?;
            return Ok(Sensitivity::Star);
        }
        let mut items = Vec::new();
        loop {
            let edge = if self.eat_kw("posedge") {
                Edge::Pos
            } else if self.eat_kw("negedge") {
                Edge::Neg
            } else {
                Edge::Level
            };
            items.push(SensItem {
                edge,
                expr: self.expr()?,
            });
            if !(self.eat_kw("or") || self.eat_sym(",")) {
                break;
            }
        }
        self.expect_sym(")")?;
        Ok(Sensitivity::List(items))
    }

    fn stmt(&mut self) -> Result<Stmt, HwGraphError> {
        self.check_supported()?;
        if self.eat_sym(";") {
            return Ok(Stmt::Empty);
        }
        if self.is_sym("@") {
            return Err(self.unsupported("event control"));
        }
        if self.eat_kw("begin") {
            let label = if self.eat_sym(":") { Some(self.ident()?) } else { None };
            let mut stmts = Vec::new();
            while !self.eat_kw("end") {
                if self.at_eof() {
                    return Err(self.error("missing `end`"));
                }
                stmts.push(self.stmt()?);
            }
            return Ok(Stmt::Block { label, stmts });
        }
        if self.eat_kw("if") {
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let then = Box::new(self.stmt()?);
            let otherwise = if self.eat_kw("else") {
                Some(Box::new(self.stmt()?))
            } else {
                None
            };
            return Ok(Stmt::If { cond, then, otherwise });
        }
        let case_kind = match self.peek() {
            Tok::Ident(w) if w == "case" => Some(CaseKind::Case),
            Tok::Ident(w) if w == "casex" => Some(CaseKind::Casex),
            Tok::Ident(w) if w == "casez" => Some(CaseKind::Casez),
            _ => None,
        };
        if let Some(kind) = case_kind {
            self.bump();
            self.expect_sym("(")?;
            let selector = self.expr()?;
            self.expect_sym(")")?;
            let mut items = Vec::new();
            while !self.eat_kw("endcase") {
                if self.at_eof() {
                    return Err(self.error("missing `endcase`"));
                }
                let mut values = Vec::new();
                if self.eat_kw("default") {
                    self.eat_sym(":");
                } else {
                    loop {
                        values.push(self.expr()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(":")?;
                }
                let body = self.stmt()?;
                items.push(CaseItem { values, body });
            }
            return Ok(Stmt::Case { kind, selector, items });
        }
        let lhs = self.lvalue()?;
        let blocking = if self.eat_sym("=") {
            true
        } else if self.eat_sym("<=") {
            false
        } else {
            return Err(self.error(format!("expected `=` or `<=`, found {}", describe(self.peek()))));
        };
        self.check_supported()?;
        let rhs = self.expr()?;
        self.expect_sym(";")?;
        Ok(if blocking {
            Stmt::Blocking { lhs, rhs }
        } else {
            Stmt::NonBlocking { lhs, rhs }
        })
    }

    fn lvalue(&mut self) -> Result<Expr, HwGraphError> {
        if self.is_sym("{") {
            return self.primary();
        }
        let name = self.ident()?;
        self.selects(Expr::Ident(name))
    }

    fn expr(&mut self) -> Result<Expr, HwGraphError> {
        let cond = self.binary(1)?;
        if self.eat_sym("?") {
            let t = self.expr()?;
            self.expect_sym(":")?;
            let f = self.expr()?;
            return Ok(Expr::Ternary(Box::new(cond), Box::new(t), Box::new(f)));
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, HwGraphError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym(s) => BinaryOp::from_symbol(s),
                _ => None,
            };
            let Some(op) = op else { break };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, HwGraphError> {
        let op = match self.peek() {
            Tok::Sym("+") => Some(UnaryOp::Plus),
            Tok::Sym("-") => Some(UnaryOp::Minus),
            Tok::Sym("!") => Some(UnaryOp::LogicalNot),
            Tok::Sym("~") => Some(UnaryOp::BitNot),
            Tok::Sym("&") => Some(UnaryOp::ReduceAnd),
            Tok::Sym("~&") => Some(UnaryOp::ReduceNand),
            Tok::Sym("|") => Some(UnaryOp::ReduceOr),
            Tok::Sym("~|") => Some(UnaryOp::ReduceNor),
            Tok::Sym("^") => Some(UnaryOp::ReduceXor),
            Tok::Sym("~^") | Tok::Sym("^~") => Some(UnaryOp::ReduceXnor),
            _ => None,
        };
        match op {
            Some(op) => {
                self.bump();
                Ok(Expr::Unary(op, Box::new(self.unary()?)))
            }
            None => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, HwGraphError> {
        self.check_supported()?;
        match self.peek().clone() {
            Tok::Number(text) => {
                self.bump();
                Ok(Expr::Number(text))
            }
            Tok::Str(_) => Err(self.unsupported("string literal")),
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.is_sym("(") {
                    return Err(self.unsupported("function call"));
                }
                self.selects(Expr::Ident(name))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("{") => {
                self.bump();
                let first = self.expr()?;
                let e = if self.eat_sym("{") {
                    let mut items = vec![self.expr()?];
                    while self.eat_sym(",") {
                        items.push(self.expr()?);
                    }
                    self.expect_sym("}")?;
                    Expr::Repeat(Box::new(first), items)
                } else {
                    let mut items = vec![first];
                    while self.eat_sym(",") {
                        items.push(self.expr()?);
                    }
                    Expr::Concat(items)
                };
                self.expect_sym("}")?;
                self.selects(e)
            }
            other => Err(self.error(format!("expected expression, found {}", describe(&other)))),
        }
    }

    fn selects(&mut self, mut base: Expr) -> Result<Expr, HwGraphError> {
        while self.eat_sym("[") {
            let first = self.expr()?;
            base = if self.eat_sym(":") {
                let lsb = self.expr()?;
                Expr::Slice(Box::new(base), Box::new(first), Box::new(lsb))
            } else if self.is_sym("+:") || self.is_sym("-:") {
                let up = self.is_sym("+:");
                self.bump();
                let width = self.expr()?;
                Expr::IndexedSlice {
                    base: Box::new(base),
                    start: Box::new(first),
                    width: Box::new(width),
                    up,
                }
            } else {
                Expr::Index(Box::new(base), Box::new(first))
            };
            self.expect_sym("]")?;
        }
        Ok(base)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(s) => format!("number `{s}`"),
        Tok::Str(s) => format!("string {s}"),
        Tok::SysIdent(s) | Tok::Directive(s) => format!("`{s}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}
