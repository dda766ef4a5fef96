use super::parser::ParseTree;
use super::syntax::*;
use super::{GraphEdge, GraphKind, GraphNode, HwGraph, HwGraphError, DEFAULT_MAX_DEPTH};

/// Generic labelled tree produced from the typed syntax tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxNode {
    pub label: &'static str,
    pub name: Option<String>,
    pub children: Vec<SyntaxNode>,
}

impl SyntaxNode {
    fn new(label: &'static str) -> Self {
        Self {
            label,
            name: None,
            children: Vec::new(),
        }
    }

    fn named(label: &'static str, name: impl Into<String>) -> Self {
        Self {
            label,
            name: Some(name.into()),
            children: Vec::new(),
        }
    }

    fn with(mut self, children: Vec<SyntaxNode>) -> Self {
        self.children = children;
        self
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(SyntaxNode::size).sum::<usize>()
    }

    /// Builds the tree for the top module, inlining instantiated user
    /// modules below their `Instance` node.
    pub fn from_parse_tree(tree: &ParseTree) -> Result<SyntaxNode, HwGraphError> {
        Builder { tree, depth: 0 }.module(tree.top_module())
    }
}

/// Every label an AST node can carry.
pub fn ast_labels() -> Vec<&'static str> {
    let mut labels = vec![
        "ModuleDef",
        "Paramlist",
        "Portlist",
        "Port",
        "Ioport",
        "Input",
        "Output",
        "Inout",
        "Decl",
        "Wire",
        "Reg",
        "Integer",
        "Parameter",
        "Localparam",
        "Width",
        "Length",
        "Identifier",
        "IntConst",
        "Assign",
        "Lvalue",
        "Rvalue",
        "Always",
        "SensList",
        "Sensitivity",
        "Initial",
        "Block",
        "IfStatement",
        "CaseStatement",
        "CasexStatement",
        "CasezStatement",
        "Case",
        "BlockingSubstitution",
        "NonblockingSubstitution",
        "InstanceList",
        "Instance",
        "ParamArg",
        "PortArg",
        "Cond",
        "Concat",
        "Repeat",
        "Pointer",
        "Partselect",
        "IndexedPartselect",
    ];
    labels.extend(UnaryOp::ALL.iter().map(|op| op.label()));
    labels.extend(BinaryOp::ALL.iter().map(|op| op.label()));
    labels.sort_unstable();
    labels.dedup();
    labels
}

/// Emits the syntax tree as a graph with node ids in DFS preorder.
pub fn ast_graph(tree: &ParseTree) -> Result<HwGraph, HwGraphError> {
    let root = SyntaxNode::from_parse_tree(tree)?;
    let mut nodes = Vec::with_capacity(root.size());
    let mut edges = Vec::with_capacity(nodes.capacity().saturating_sub(1));
    let mut stack: Vec<(&SyntaxNode, Option<usize>)> = vec![(&root, None)];
    while let Some((node, parent)) = stack.pop() {
        let id = nodes.len();
        nodes.push(GraphNode {
            id,
            label: node.label.to_string(),
            name: node.name.clone(),
        });
        if let Some(p) = parent {
            edges.push(GraphEdge { src: p, dst: id });
        }
        stack.extend(node.children.iter().rev().map(|c| (c, Some(id))));
    }
    let mut g = HwGraph {
        design: tree.top.clone(),
        kind: GraphKind::Ast,
        nodes,
        edges,
    };
    g.canonicalize();
    Ok(g)
}

struct Builder<'a> {
    tree: &'a ParseTree,
    depth: usize,
}

impl Builder<'_> {
    fn module(&mut self, m: &ModuleDef) -> Result<SyntaxNode, HwGraphError> {
        let mut children = Vec::new();
        if !m.params.is_empty() {
            let decls = m.params.iter().map(param_decl).collect();
            children.push(SyntaxNode::new("Paramlist").with(decls));
        }
        if !m.ports.is_empty() {
            let mut ports = Vec::new();
            for p in &m.ports {
                match p {
                    PortHeader::Named(n) => ports.push(SyntaxNode::named("Port", n)),
                    PortHeader::Ansi(d) => {
                        for n in &d.names {
                            let mut io = vec![port_node(d, n)];
                            if let Some(net) = d.net {
                                io.push(SyntaxNode::named(net_label(net), n));
                            }
                            ports.push(SyntaxNode::new("Ioport").with(io));
                        }
                    }
                }
            }
            children.push(SyntaxNode::new("Portlist").with(ports));
        }
        for item in &m.items {
            self.item(item, &mut children)?;
        }
        Ok(SyntaxNode::named("ModuleDef", &m.name).with(children))
    }

    fn item(&mut self, item: &ModuleItem, out: &mut Vec<SyntaxNode>) -> Result<(), HwGraphError> {
        match item {
            ModuleItem::Port(d) => {
                let decls = d.names.iter().map(|n| port_node(d, n)).collect();
                out.push(SyntaxNode::new("Decl").with(decls));
            }
            ModuleItem::Net(d) => {
                let mut decls = Vec::new();
                for v in &d.vars {
                    let mut c = Vec::new();
                    if let Some(r) = &d.range {
                        c.push(range_node("Width", r));
                    }
                    c.extend(v.dims.iter().map(|r| range_node("Length", r)));
                    decls.push(SyntaxNode::named(net_label(d.kind), &v.name).with(c));
                    if let Some(init) = &v.init {
                        decls.push(assign_node("Assign", &Expr::Ident(v.name.clone()), init));
                    }
                }
                out.push(SyntaxNode::new("Decl").with(decls));
            }
            ModuleItem::Param(p) => out.push(param_decl(p)),
            ModuleItem::Assign(pairs) => {
                out.extend(pairs.iter().map(|(l, r)| assign_node("Assign", l, r)));
            }
            ModuleItem::Always(a) => {
                let sens = match &a.sens {
                    Sensitivity::Star => vec![SyntaxNode::named("Sensitivity", "all")],
                    Sensitivity::List(items) => items
                        .iter()
                        .map(|s| {
                            let edge = match s.edge {
                                Edge::Pos => "posedge",
                                Edge::Neg => "negedge",
                                Edge::Level => "level",
                            };
                            SyntaxNode::named("Sensitivity", edge).with(vec![expr_node(&s.expr)])
                        })
                        .collect(),
                };
                let mut c = vec![SyntaxNode::new("SensList").with(sens)];
                c.extend(stmt_node(&a.body));
                out.push(SyntaxNode::new("Always").with(c));
            }
            ModuleItem::Initial(s) => {
                out.push(SyntaxNode::new("Initial").with(stmt_node(s).into_iter().collect()));
            }
            ModuleItem::Instances(list) => out.push(self.instance_list(list)?),
        }
        Ok(())
    }

    fn instance_list(&mut self, list: &InstanceList) -> Result<SyntaxNode, HwGraphError> {
        let mut children: Vec<SyntaxNode> = list.params.iter().map(|c| conn_node("ParamArg", c)).collect();
        let def = match list.gate {
            Some(_) => None,
            None => Some(
                self.tree
                    .module(&list.module)
                    .ok_or_else(|| HwGraphError::UnknownModule(list.module.clone()))?,
            ),
        };
        for inst in &list.instances {
            let mut c: Vec<SyntaxNode> = inst.conns.iter().map(|c| conn_node("PortArg", c)).collect();
            if let Some(def) = def {
                if self.depth >= DEFAULT_MAX_DEPTH {
                    return Err(HwGraphError::InstanceDepth(DEFAULT_MAX_DEPTH));
                }
                self.depth += 1;
                c.push(self.module(def)?);
                self.depth -= 1;
            }
            let node = match &inst.name {
                Some(n) => SyntaxNode::named("Instance", n),
                None => SyntaxNode::new("Instance"),
            };
            children.push(node.with(c));
        }
        Ok(SyntaxNode::named("InstanceList", &list.module).with(children))
    }
}

fn net_label(kind: NetKind) -> &'static str {
    match kind {
        NetKind::Wire => "Wire",
        NetKind::Reg => "Reg",
        NetKind::Integer => "Integer",
    }
}

fn port_node(d: &PortDecl, name: &str) -> SyntaxNode {
    let label = match d.dir {
        Direction::Input => "Input",
        Direction::Output => "Output",
        Direction::Inout => "Inout",
    };
    let c = d.range.iter().map(|r| range_node("Width", r)).collect();
    SyntaxNode::named(label, name).with(c)
}

fn param_decl(p: &ParamDecl) -> SyntaxNode {
    let label = if p.local { "Localparam" } else { "Parameter" };
    let decls = p
        .assigns
        .iter()
        .map(|(n, e)| {
            let mut c = vec![SyntaxNode::new("Rvalue").with(vec![expr_node(e)])];
            if let Some(r) = &p.range {
                c.push(range_node("Width", r));
            }
            SyntaxNode::named(label, n).with(c)
        })
        .collect();
    SyntaxNode::new("Decl").with(decls)
}

fn range_node(label: &'static str, r: &Range) -> SyntaxNode {
    SyntaxNode::new(label).with(vec![expr_node(&r.msb), expr_node(&r.lsb)])
}

fn conn_node(label: &'static str, c: &Connection) -> SyntaxNode {
    let node = match &c.port {
        Some(p) => SyntaxNode::named(label, p),
        None => SyntaxNode::new(label),
    };
    node.with(c.expr.iter().map(expr_node).collect())
}

fn assign_node(label: &'static str, lhs: &Expr, rhs: &Expr) -> SyntaxNode {
    SyntaxNode::new(label).with(vec![
        SyntaxNode::new("Lvalue").with(vec![expr_node(lhs)]),
        SyntaxNode::new("Rvalue").with(vec![expr_node(rhs)]),
    ])
}

fn stmt_node(s: &Stmt) -> Option<SyntaxNode> {
    Some(match s {
        Stmt::Empty => return None,
        Stmt::Block { label, stmts } => {
            let node = match label {
                Some(l) => SyntaxNode::named("Block", l),
                None => SyntaxNode::new("Block"),
            };
            node.with(stmts.iter().filter_map(stmt_node).collect())
        }
        Stmt::If { cond, then, otherwise } => {
            let mut c = vec![expr_node(cond)];
            c.extend(stmt_node(then));
            if let Some(o) = otherwise {
                c.extend(stmt_node(o));
            }
            SyntaxNode::new("IfStatement").with(c)
        }
        Stmt::Case { kind, selector, items } => {
            let label = match kind {
                CaseKind::Case => "CaseStatement",
                CaseKind::Casex => "CasexStatement",
                CaseKind::Casez => "CasezStatement",
            };
            let mut c = vec![expr_node(selector)];
            for item in items {
                let mut ic: Vec<SyntaxNode> = item.values.iter().map(expr_node).collect();
                ic.extend(stmt_node(&item.body));
                c.push(SyntaxNode::new("Case").with(ic));
            }
            SyntaxNode::new(label).with(c)
        }
        Stmt::Blocking { lhs, rhs } => assign_node("BlockingSubstitution", lhs, rhs),
        Stmt::NonBlocking { lhs, rhs } => assign_node("NonblockingSubstitution", lhs, rhs),
    })
}

fn expr_node(e: &Expr) -> SyntaxNode {
    match e {
        Expr::Ident(n) => SyntaxNode::named("Identifier", n),
        Expr::Number(t) => SyntaxNode::named("IntConst", t),
        Expr::Unary(op, a) => SyntaxNode::new(op.label()).with(vec![expr_node(a)]),
        Expr::Binary(op, l, r) => SyntaxNode::new(op.label()).with(vec![expr_node(l), expr_node(r)]),
        Expr::Ternary(c, t, f) => SyntaxNode::new("Cond").with(vec![expr_node(c), expr_node(t), expr_node(f)]),
        Expr::Concat(items) => SyntaxNode::new("Concat").with(items.iter().map(expr_node).collect()),
        Expr::Repeat(n, items) => SyntaxNode::new("Repeat").with(vec![
            expr_node(n),
            SyntaxNode::new("Concat").with(items.iter().map(expr_node).collect()),
        ]),
        Expr::Index(b, i) => SyntaxNode::new("Pointer").with(vec![expr_node(b), expr_node(i)]),
        Expr::Slice(b, m, l) => SyntaxNode::new("Partselect").with(vec![expr_node(b), expr_node(m), expr_node(l)]),
        Expr::IndexedSlice { base, start, width, .. } => {
            SyntaxNode::new("IndexedPartselect").with(vec![expr_node(base), expr_node(start), expr_node(width)])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{flatten, parse_verilog, SourceUnit};
    use super::*;

    fn tree(src: &str) -> ParseTree {
        parse_verilog(&flatten(&SourceUnit::single("t.v", src), None).unwrap()).unwrap()
    }

    #[test]
    fn one_statement_module_matches_hand_tree() {
        let root = SyntaxNode::from_parse_tree(&tree("module m(input a, output b); assign b = a; endmodule")).unwrap();
        let n = |l, name: &str| SyntaxNode::named(l, name);
        let expected = n("ModuleDef", "m").with(vec![
            SyntaxNode::new("Portlist").with(vec![
                SyntaxNode::new("Ioport").with(vec![n("Input", "a")]),
                SyntaxNode::new("Ioport").with(vec![n("Output", "b")]),
            ]),
            SyntaxNode::new("Assign").with(vec![
                SyntaxNode::new("Lvalue").with(vec![n("Identifier", "b")]),
                SyntaxNode::new("Rvalue").with(vec![n("Identifier", "a")]),
            ]),
        ]);
        assert_eq!(root, expected);
        let g = ast_graph(&tree("module m(input a, output b); assign b = a; endmodule")).unwrap();
        assert_eq!(g.num_nodes(), 11);
        assert_eq!(g.num_edges(), 10);
        assert_eq!(g.nodes[0].label, "ModuleDef");
        g.validate().unwrap();
    }

    #[test]
    fn empty_module_is_a_single_node() {
        let g = ast_graph(&tree("module m; endmodule")).unwrap();
        assert_eq!(g.num_nodes(), 1);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn preorder_ids() {
        let g = ast_graph(&tree("module m(input a, output b); assign b = a; endmodule")).unwrap();
        for e in &g.edges {
            assert!(e.src < e.dst);
        }
        let labels: Vec<_> = g.nodes.iter().map(|n| n.label.as_str()).collect();
        assert_eq!(
            labels,
            ["ModuleDef", "Portlist", "Ioport", "Input", "Ioport", "Output", "Assign", "Lvalue", "Identifier", "Rvalue", "Identifier"]
        );
    }

    #[test]
    fn instances_inline_child_modules() {
        let g = ast_graph(&tree(
            "module top(input x, output y); sub u1(.a(x), .b(y)); endmodule
             module sub(input a, output b); assign b = ~a; endmodule",
        ))
        .unwrap();
        g.validate().unwrap();
        let defs = g.nodes.iter().filter(|n| n.label == "ModuleDef").count();
        assert_eq!(defs, 2);
        let known = ast_labels();
        assert!(g.nodes.iter().all(|n| known.contains(&n.label.as_str())));
    }
}
