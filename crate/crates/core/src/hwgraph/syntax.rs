//! Typed syntax tree for the supported Verilog subset.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Input,
    Output,
    Inout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetKind {
    Wire,
    Reg,
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Range {
    pub msb: Expr,
    pub lsb: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleDef {
    pub name: String,
    pub params: Vec<ParamDecl>,
    pub ports: Vec<PortHeader>,
    pub items: Vec<ModuleItem>,
    pub line: usize,
}

impl ModuleDef {
    /// Port names in header order.
    pub fn port_names(&self) -> Vec<&str> {
        self.ports
            .iter()
            .flat_map(|p| match p {
                PortHeader::Named(n) => vec![n.as_str()],
                PortHeader::Ansi(d) => d.names.iter().map(String::as_str).collect(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PortHeader {
    /// Non-ANSI style: only the name appears in the header.
    Named(String),
    Ansi(PortDecl),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortDecl {
    pub dir: Direction,
    pub net: Option<NetKind>,
    pub signed: bool,
    pub range: Option<Range>,
    pub names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetDecl {
    pub kind: NetKind,
    pub signed: bool,
    pub range: Option<Range>,
    pub vars: Vec<NetVar>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetVar {
    pub name: String,
    pub dims: Vec<Range>,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub local: bool,
    pub range: Option<Range>,
    pub assigns: Vec<(String, Expr)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModuleItem {
    Port(PortDecl),
    Net(NetDecl),
    Param(ParamDecl),
    Assign(Vec<(Expr, Expr)>),
    Always(Always),
    Initial(Stmt),
    Instances(InstanceList),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Always {
    pub sens: Sensitivity,
    pub body: Stmt,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sensitivity {
    /// `@*` or `@(*)`.
    Star,
    List(Vec<SensItem>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Pos,
    Neg,
    Level,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensItem {
    pub edge: Edge,
    pub expr: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
}

impl Gate {
    pub fn from_keyword(kw: &str) -> Option<Gate> {
        Some(match kw {
            "and" => Gate::And,
            "or" => Gate::Or,
            "nand" => Gate::Nand,
            "nor" => Gate::Nor,
            "xor" => Gate::Xor,
            "xnor" => Gate::Xnor,
            "not" => Gate::Not,
            "buf" => Gate::Buf,
            _ => return None,
        })
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Gate::And => "and",
            Gate::Or => "or",
            Gate::Nand => "nand",
            Gate::Nor => "nor",
            Gate::Xor => "xor",
            Gate::Xnor => "xnor",
            Gate::Not => "not",
            Gate::Buf => "buf",
        }
    }

    /// Data-flow node label.
    pub fn label(self) -> &'static str {
        match self {
            Gate::And => "And",
            Gate::Or => "Or",
            Gate::Nand => "Nand",
            Gate::Nor => "Nor",
            Gate::Xor => "Xor",
            Gate::Xnor => "Xnor",
            Gate::Not => "Not",
            Gate::Buf => "Buf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceList {
    /// Module name, or the gate keyword for primitives.
    pub module: String,
    pub gate: Option<Gate>,
    pub params: Vec<Connection>,
    pub instances: Vec<Instance>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: Option<String>,
    pub conns: Vec<Connection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    /// `Some` for `.port(expr)` style connections.
    pub port: Option<String>,
    pub expr: Option<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Case,
    Casex,
    Casez,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseItem {
    /// Empty for the `default` item.
    pub values: Vec<Expr>,
    pub body: Stmt,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Block { label: Option<String>, stmts: Vec<Stmt> },
    If { cond: Expr, then: Box<Stmt>, otherwise: Option<Box<Stmt>> },
    Case { kind: CaseKind, selector: Expr, items: Vec<CaseItem> },
    Blocking { lhs: Expr, rhs: Expr },
    NonBlocking { lhs: Expr, rhs: Expr },
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Plus,
    Minus,
    LogicalNot,
    BitNot,
    ReduceAnd,
    ReduceNand,
    ReduceOr,
    ReduceNor,
    ReduceXor,
    ReduceXnor,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 10] = [
        UnaryOp::Plus,
        UnaryOp::Minus,
        UnaryOp::LogicalNot,
        UnaryOp::BitNot,
        UnaryOp::ReduceAnd,
        UnaryOp::ReduceNand,
        UnaryOp::ReduceOr,
        UnaryOp::ReduceNor,
        UnaryOp::ReduceXor,
        UnaryOp::ReduceXnor,
    ];

    pub fn label(self) -> &'static str {
        match self {
            UnaryOp::Plus => "Uplus",
            UnaryOp::Minus => "Uminus",
            UnaryOp::LogicalNot => "Ulnot",
            UnaryOp::BitNot => "Unot",
            UnaryOp::ReduceAnd => "Uand",
            UnaryOp::ReduceNand => "Unand",
            UnaryOp::ReduceOr => "Uor",
            UnaryOp::ReduceNor => "Unor",
            UnaryOp::ReduceXor => "Uxor",
            UnaryOp::ReduceXnor => "Uxnor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Power,
    Times,
    Divide,
    Mod,
    Plus,
    Minus,
    Sll,
    Srl,
    Sla,
    Sra,
    LessThan,
    GreaterThan,
    LessEq,
    GreaterEq,
    Eq,
    NotEq,
    Eql,
    NotEql,
    And,
    Xor,
    Xnor,
    Or,
    Land,
    Lor,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 24] = [
        BinaryOp::Power,
        BinaryOp::Times,
        BinaryOp::Divide,
        BinaryOp::Mod,
        BinaryOp::Plus,
        BinaryOp::Minus,
        BinaryOp::Sll,
        BinaryOp::Srl,
        BinaryOp::Sla,
        BinaryOp::Sra,
        BinaryOp::LessThan,
        BinaryOp::GreaterThan,
        BinaryOp::LessEq,
        BinaryOp::GreaterEq,
        BinaryOp::Eq,
        BinaryOp::NotEq,
        BinaryOp::Eql,
        BinaryOp::NotEql,
        BinaryOp::And,
        BinaryOp::Xor,
        BinaryOp::Xnor,
        BinaryOp::Or,
        BinaryOp::Land,
        BinaryOp::Lor,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BinaryOp::Power => "Power",
            BinaryOp::Times => "Times",
            BinaryOp::Divide => "Divide",
            BinaryOp::Mod => "Mod",
            BinaryOp::Plus => "Plus",
            BinaryOp::Minus => "Minus",
            BinaryOp::Sll => "Sll",
            BinaryOp::Srl => "Srl",
            BinaryOp::Sla => "Sla",
            BinaryOp::Sra => "Sra",
            BinaryOp::LessThan => "LessThan",
            BinaryOp::GreaterThan => "GreaterThan",
            BinaryOp::LessEq => "LessEq",
            BinaryOp::GreaterEq => "GreaterEq",
            BinaryOp::Eq => "Eq",
            BinaryOp::NotEq => "NotEq",
            BinaryOp::Eql => "Eql",
            BinaryOp::NotEql => "NotEql",
            BinaryOp::And => "And",
            BinaryOp::Xor => "Xor",
            BinaryOp::Xnor => "Xnor",
            BinaryOp::Or => "Or",
            BinaryOp::Land => "Land",
            BinaryOp::Lor => "Lor",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Lor => 1,
            BinaryOp::Land => 2,
            BinaryOp::Or => 3,
            BinaryOp::Xor | BinaryOp::Xnor => 4,
            BinaryOp::And => 5,
            BinaryOp::Eq | BinaryOp::NotEq | BinaryOp::Eql | BinaryOp::NotEql => 6,
            BinaryOp::LessThan | BinaryOp::GreaterThan | BinaryOp::LessEq | BinaryOp::GreaterEq => 7,
            BinaryOp::Sll | BinaryOp::Srl | BinaryOp::Sla | BinaryOp::Sra => 8,
            BinaryOp::Plus | BinaryOp::Minus => 9,
            BinaryOp::Times | BinaryOp::Divide | BinaryOp::Mod => 10,
            BinaryOp::Power => 11,
        }
    }

    pub fn from_symbol(sym: &str) -> Option<BinaryOp> {
        Some(match sym {
            "**" => BinaryOp::Power,
            "*" => BinaryOp::Times,
            "/" => BinaryOp::Divide,
            "%" => BinaryOp::Mod,
            "+" => BinaryOp::Plus,
            "-" => BinaryOp::Minus,
            "<<" => BinaryOp::Sll,
            ">>" => BinaryOp::Srl,
            "<<<" => BinaryOp::Sla,
            ">>>" => BinaryOp::Sra,
            "<" => BinaryOp::LessThan,
            ">" => BinaryOp::GreaterThan,
            "<=" => BinaryOp::LessEq,
            ">=" => BinaryOp::GreaterEq,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::NotEq,
            "===" => BinaryOp::Eql,
            "!==" => BinaryOp::NotEql,
            "&" => BinaryOp::And,
            "^" => BinaryOp::Xor,
            "~^" | "^~" => BinaryOp::Xnor,
            "|" => BinaryOp::Or,
            "&&" => BinaryOp::Land,
            "||" => BinaryOp::Lor,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Ident(String),
    Number(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Concat(Vec<Expr>),
    Repeat(Box<Expr>, Vec<Expr>),
    /// Bit select `base[index]`.
    Index(Box<Expr>, Box<Expr>),
    /// Part select `base[msb:lsb]`.
    Slice(Box<Expr>, Box<Expr>, Box<Expr>),
    /// Indexed part select `base[start +: width]` (`up`) or `base[start -: width]`.
    IndexedSlice {
        base: Box<Expr>,
        start: Box<Expr>,
        width: Box<Expr>,
        up: bool,
    },
}

impl Expr {
    pub fn ident(name: &str) -> Expr {
        Expr::Ident(name.to_string())
    }
}
