use std::collections::{BTreeMap, HashMap};

use super::parser::ParseTree;
use super::syntax::*;
use super::{GraphEdge, GraphKind, GraphNode, HwGraph, HwGraphError};

/// Identity of a data-flow node inside one elaboration.
///
/// Signals are identified by hierarchical name so fragments built for
/// different roots unify on merge; operations and constants are identified
/// by their occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKey {
    Signal(String),
    Expr(usize),
}

/// Data-flow graph rooted at one signal, with the key of every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DfgFragment {
    pub graph: HwGraph,
    pub keys: Vec<NodeKey>,
    /// Ordered dependency lists by local node id.
    pub children: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Operand {
    Signal(usize),
    Expr(usize),
}

#[derive(Debug, Clone)]
struct ExprNode {
    label: &'static str,
    name: Option<String>,
    children: Vec<Operand>,
}

#[derive(Debug, Clone)]
struct Signal {
    name: String,
    drivers: Vec<Operand>,
}

#[derive(Debug, Default)]
struct Scope {
    prefix: String,
    signals: HashMap<String, usize>,
    params: HashMap<String, (Expr, usize)>,
    dirs: HashMap<String, Direction>,
}

/// The whole design flattened into signals, operation nodes and drivers.
///
/// Instances are inlined with `inst.` name prefixes; `initial` blocks are
/// ignored and clock edges in sensitivity lists carry no data dependency.
#[derive(Debug)]
pub struct Elaboration {
    design: String,
    signals: Vec<Signal>,
    by_name: HashMap<String, usize>,
    exprs: Vec<ExprNode>,
    scopes: Vec<Scope>,
    max_depth: usize,
}

type Env = BTreeMap<usize, Operand>;

impl Elaboration {
    pub fn new(tree: &ParseTree, max_depth: usize) -> Result<Self, HwGraphError> {
        let mut e = Elaboration {
            design: tree.top.clone(),
            signals: Vec::new(),
            by_name: HashMap::new(),
            exprs: Vec::new(),
            scopes: Vec::new(),
            max_depth,
        };
        let top = tree.top_module();
        let scope = e.open_scope(top, String::new(), Vec::new(), usize::MAX)?;
        e.module_body(tree, top, scope, 0)?;
        Ok(e)
    }

    pub fn design(&self) -> &str {
        &self.design
    }

    /// Hierarchical signal names in declaration order.
    pub fn signal_names(&self) -> impl Iterator<Item = &str> {
        self.signals.iter().map(|s| s.name.as_str())
    }

    /// Signals with at least one driver, in declaration order.
    pub fn driven_signals(&self) -> Vec<&str> {
        self.signals
            .iter()
            .filter(|s| !s.drivers.is_empty())
            .map(|s| s.name.as_str())
            .collect()
    }

    /// Data-flow fragment rooted at `signal`.
    pub fn fragment(&self, signal: &str) -> Result<DfgFragment, HwGraphError> {
        let idx = *self
            .by_name
            .get(signal)
            .ok_or_else(|| HwGraphError::UnknownSignal(signal.to_string()))?;
        let root = [Operand::Signal(idx)];
        let (graph, keys) = self.walk(&root);
        let (order, _) = preorder(&root, |op| self.children(*op).to_vec());
        let local: HashMap<Operand, usize> = order.iter().enumerate().map(|(i, op)| (*op, i)).collect();
        let children = order
            .iter()
            .map(|op| self.children(*op).iter().map(|c| local[c]).collect())
            .collect();
        Ok(DfgFragment { graph, keys, children })
    }

    /// The merged graph of every driven signal.
    pub fn design_graph(&self) -> Result<HwGraph, HwGraphError> {
        let roots: Vec<Operand> = (0..self.signals.len())
            .filter(|&i| !self.signals[i].drivers.is_empty())
            .map(Operand::Signal)
            .collect();
        if roots.is_empty() {
            return Err(HwGraphError::EmptyGraph);
        }
        Ok(self.walk(&roots).0)
    }

    fn children(&self, op: Operand) -> &[Operand] {
        match op {
            Operand::Signal(i) => &self.signals[i].drivers,
            Operand::Expr(i) => &self.exprs[i].children,
        }
    }

    fn key(&self, op: Operand) -> NodeKey {
        match op {
            Operand::Signal(i) => NodeKey::Signal(self.signals[i].name.clone()),
            Operand::Expr(i) => NodeKey::Expr(i),
        }
    }

    fn node(&self, op: Operand, id: usize) -> GraphNode {
        match op {
            Operand::Signal(i) => GraphNode {
                id,
                label: "signal".into(),
                name: Some(self.signals[i].name.clone()),
            },
            Operand::Expr(i) => GraphNode {
                id,
                label: self.exprs[i].label.to_string(),
                name: self.exprs[i].name.clone(),
            },
        }
    }

    fn walk(&self, roots: &[Operand]) -> (HwGraph, Vec<NodeKey>) {
        let (order, edges) = preorder(roots, |op| self.children(*op).to_vec());
        let nodes = order.iter().enumerate().map(|(id, op)| self.node(*op, id)).collect();
        let keys = order.iter().map(|op| self.key(*op)).collect();
        let mut g = HwGraph {
            design: self.design.clone(),
            kind: GraphKind::Dfg,
            nodes,
            edges,
        };
        g.canonicalize();
        (g, keys)
    }

    fn open_scope(
        &mut self,
        m: &ModuleDef,
        prefix: String,
        overrides: Vec<(Option<String>, Expr)>,
        parent: usize,
    ) -> Result<usize, HwGraphError> {
        let id = self.scopes.len();
        let mut scope = Scope {
            prefix,
            ..Scope::default()
        };
        let mut declared: Vec<String> = Vec::new();
        let mut declare = |name: &str| {
            if !declared.iter().any(|d| d == name) {
                declared.push(name.to_string());
            }
        };
        for p in &m.ports {
            match p {
                PortHeader::Named(n) => declare(n),
                PortHeader::Ansi(d) => {
                    for n in &d.names {
                        declare(n);
                        scope.dirs.insert(n.clone(), d.dir);
                    }
                }
            }
        }
        let mut header_params: Vec<&str> = Vec::new();
        for p in &m.params {
            for (n, e) in &p.assigns {
                scope.params.insert(n.clone(), (e.clone(), id));
                if !p.local {
                    header_params.push(n);
                }
            }
        }
        for item in &m.items {
            match item {
                ModuleItem::Port(d) => {
                    for n in &d.names {
                        declare(n);
                        scope.dirs.insert(n.clone(), d.dir);
                    }
                }
                ModuleItem::Net(d) => d.vars.iter().for_each(|v| declare(&v.name)),
                ModuleItem::Param(p) => {
                    for (n, e) in &p.assigns {
                        scope.params.insert(n.clone(), (e.clone(), id));
                        if !p.local {
                            header_params.push(n);
                        }
                    }
                }
                _ => {}
            }
        }
        for (i, (name, value)) in overrides.into_iter().enumerate() {
            let target = match name {
                Some(n) => n,
                None => match header_params.get(i) {
                    Some(n) => n.to_string(),
                    None => continue,
                },
            };
            if scope.params.contains_key(&target) {
                scope.params.insert(target, (value, parent));
            }
        }
        for n in declared {
            let idx = self.new_signal(&format!("{}{}", scope.prefix, n));
            scope.signals.insert(n, idx);
        }
        self.scopes.push(scope);
        Ok(id)
    }

    fn new_signal(&mut self, name: &str) -> usize {
        if let Some(&i) = self.by_name.get(name) {
            return i;
        }
        let i = self.signals.len();
        self.signals.push(Signal {
            name: name.to_string(),
            drivers: Vec::new(),
        });
        self.by_name.insert(name.to_string(), i);
        i
    }

    fn resolve_signal(&mut self, scope: usize, name: &str) -> usize {
        if let Some(&i) = self.scopes[scope].signals.get(name) {
            return i;
        }
        // Implicit net.
        let full = format!("{}{}", self.scopes[scope].prefix, name);
        let i = self.new_signal(&full);
        self.scopes[scope].signals.insert(name.to_string(), i);
        i
    }

    fn push_expr(&mut self, label: &'static str, name: Option<String>, children: Vec<Operand>) -> Operand {
        self.exprs.push(ExprNode { label, name, children });
        Operand::Expr(self.exprs.len() - 1)
    }

    fn drive(&mut self, target: usize, value: Operand) {
        if value != Operand::Signal(target) || !self.signals[target].drivers.contains(&value) {
            self.signals[target].drivers.push(value);
        }
    }

    fn lower(&mut self, scope: usize, e: &Expr) -> Operand {
        match e {
            Expr::Ident(n) => {
                if !self.scopes[scope].signals.contains_key(n) {
                    if let Some((pe, ps)) = self.scopes[scope].params.get(n).cloned() {
                        return self.lower(ps, &pe);
                    }
                }
                Operand::Signal(self.resolve_signal(scope, n))
            }
            Expr::Number(t) => self.push_expr("const", Some(t.clone()), Vec::new()),
            Expr::Unary(op, a) => {
                let a = self.lower(scope, a);
                self.push_expr(op.label(), None, vec![a])
            }
            Expr::Binary(op, l, r) => {
                let l = self.lower(scope, l);
                let r = self.lower(scope, r);
                self.push_expr(op.label(), None, vec![l, r])
            }
            Expr::Ternary(c, t, f) => {
                let c = self.lower(scope, c);
                let t = self.lower(scope, t);
                let f = self.lower(scope, f);
                self.push_expr("Branch", None, vec![c, t, f])
            }
            Expr::Concat(items) => {
                let c = items.iter().map(|i| self.lower(scope, i)).collect();
                self.push_expr("Concat", None, c)
            }
            Expr::Repeat(n, items) => {
                let mut c = vec![self.lower(scope, n)];
                c.extend(items.iter().map(|i| self.lower(scope, i)));
                self.push_expr("Repeat", None, c)
            }
            Expr::Index(b, i) => {
                let b = self.lower(scope, b);
                let i = self.lower(scope, i);
                self.push_expr("Pointer", None, vec![b, i])
            }
            Expr::Slice(b, m, l) => {
                let b = self.lower(scope, b);
                let m = self.lower(scope, m);
                let l = self.lower(scope, l);
                self.push_expr("Partselect", None, vec![b, m, l])
            }
            Expr::IndexedSlice { base, start, width, .. } => {
                let b = self.lower(scope, base);
                let s = self.lower(scope, start);
                let w = self.lower(scope, width);
                self.push_expr("Partselect", None, vec![b, s, w])
            }
        }
    }

    /// Base signals written by an lvalue.
    fn targets(&mut self, scope: usize, lhs: &Expr, out: &mut Vec<usize>) {
        match lhs {
            Expr::Ident(n) => out.push(self.resolve_signal(scope, n)),
            Expr::Index(b, _) | Expr::Slice(b, _, _) => self.targets(scope, b, out),
            Expr::IndexedSlice { base, .. } => self.targets(scope, base, out),
            Expr::Concat(items) => items.iter().for_each(|i| self.targets(scope, i, out)),
            _ => {}
        }
    }

    fn module_body(&mut self, tree: &ParseTree, m: &ModuleDef, scope: usize, depth: usize) -> Result<(), HwGraphError> {
        for item in &m.items {
            match item {
                ModuleItem::Net(d) => {
                    for v in d.vars.iter().filter(|v| v.init.is_some()) {
                        let t = self.resolve_signal(scope, &v.name);
                        let value = self.lower(scope, v.init.as_ref().unwrap());
                        self.drive(t, value);
                    }
                }
                ModuleItem::Assign(pairs) => {
                    for (lhs, rhs) in pairs {
                        let mut ts = Vec::new();
                        self.targets(scope, lhs, &mut ts);
                        let value = self.lower(scope, rhs);
                        for t in ts {
                            self.drive(t, value);
                        }
                    }
                }
                ModuleItem::Always(a) => {
                    let env = self.exec(scope, &a.body, Env::new());
                    for (t, value) in env {
                        if value != Operand::Signal(t) {
                            self.drive(t, value);
                        }
                    }
                }
                ModuleItem::Instances(list) => match list.gate {
                    Some(g) => self.gates(scope, g, list),
                    None => self.instances(tree, scope, list, depth)?,
                },
                ModuleItem::Port(_) | ModuleItem::Param(_) | ModuleItem::Initial(_) => {}
            }
        }
        Ok(())
    }

    fn gates(&mut self, scope: usize, gate: Gate, list: &InstanceList) {
        for inst in &list.instances {
            let terms: Vec<&Expr> = inst.conns.iter().filter_map(|c| c.expr.as_ref()).collect();
            if terms.len() < 2 {
                continue;
            }
            // not/buf: every terminal but the last is an output.
            let n_out = if matches!(gate, Gate::Not | Gate::Buf) { terms.len() - 1 } else { 1 };
            let inputs: Vec<Operand> = terms[n_out..].iter().map(|e| self.lower(scope, e)).collect();
            let value = self.push_expr(gate.label(), None, inputs);
            for out in &terms[..n_out] {
                let mut ts = Vec::new();
                self.targets(scope, out, &mut ts);
                for t in ts {
                    self.drive(t, value);
                }
            }
        }
    }

    fn instances(
        &mut self,
        tree: &ParseTree,
        scope: usize,
        list: &InstanceList,
        depth: usize,
    ) -> Result<(), HwGraphError> {
        let def = tree
            .module(&list.module)
            .ok_or_else(|| HwGraphError::UnknownModule(list.module.clone()))?;
        if depth + 1 > self.max_depth {
            return Err(HwGraphError::InstanceDepth(self.max_depth));
        }
        let overrides: Vec<(Option<String>, Expr)> = list
            .params
            .iter()
            .filter_map(|c| c.expr.clone().map(|e| (c.port.clone(), e)))
            .collect();
        for (k, inst) in list.instances.iter().enumerate() {
            let inst_name = inst.name.clone().unwrap_or_else(|| format!("{}_{k}", list.module));
            let prefix = format!("{}{}.", self.scopes[scope].prefix, inst_name);
            let child = self.open_scope(def, prefix, overrides.clone(), scope)?;
            let ports = def.port_names();
            for (i, c) in inst.conns.iter().enumerate() {
                let Some(expr) = &c.expr else { continue };
                let port = match &c.port {
                    Some(p) => p.as_str(),
                    None => match ports.get(i) {
                        Some(p) => p,
                        None => continue,
                    },
                };
                let Some(&p_sig) = self.scopes[child].signals.get(port) else {
                    return Err(HwGraphError::UnknownSignal(format!("{}{}", self.scopes[child].prefix, port)));
                };
                let dir = self.scopes[child].dirs.get(port).copied().unwrap_or(Direction::Input);
                if matches!(dir, Direction::Input | Direction::Inout) {
                    let value = self.lower(scope, expr);
                    self.drive(p_sig, value);
                }
                if matches!(dir, Direction::Output | Direction::Inout) {
                    let mut ts = Vec::new();
                    self.targets(scope, expr, &mut ts);
                    for t in ts {
                        self.drive(t, Operand::Signal(p_sig));
                    }
                }
            }
            self.module_body(tree, def, child, depth + 1)?;
        }
        Ok(())
    }

    fn exec(&mut self, scope: usize, s: &Stmt, mut env: Env) -> Env {
        match s {
            Stmt::Empty => env,
            Stmt::Block { stmts, .. } => {
                for st in stmts {
                    env = self.exec(scope, st, env);
                }
                env
            }
            Stmt::Blocking { lhs, rhs } | Stmt::NonBlocking { lhs, rhs } => {
                let value = self.lower(scope, rhs);
                let mut ts = Vec::new();
                self.targets(scope, lhs, &mut ts);
                for t in ts {
                    env.insert(t, value);
                }
                env
            }
            Stmt::If { cond, then, otherwise } => {
                let c = self.lower(scope, cond);
                let t_env = self.exec(scope, then, env.clone());
                let f_env = match otherwise {
                    Some(o) => self.exec(scope, o, env.clone()),
                    None => env.clone(),
                };
                self.merge(c, &env, t_env, f_env)
            }
            Stmt::Case { selector, items, .. } => {
                let sel = self.lower(scope, selector);
                self.exec_case(scope, sel, items, env)
            }
        }
    }

    fn exec_case(&mut self, scope: usize, sel: Operand, items: &[CaseItem], env: Env) -> Env {
        let Some((first, rest)) = items.split_first() else {
            return env;
        };
        if first.values.is_empty() {
            // `default` applies only when no other item matches.
            if rest.is_empty() {
                return self.exec(scope, &first.body, env);
            }
            let mut reordered: Vec<CaseItem> = rest.to_vec();
            reordered.push(first.clone());
            return self.exec_case(scope, sel, &reordered, env);
        }
        let mut cond = None;
        for v in &first.values {
            let v = self.lower(scope, v);
            let eq = self.push_expr("Eq", None, vec![sel, v]);
            cond = Some(match cond {
                None => eq,
                Some(prev) => self.push_expr("Lor", None, vec![prev, eq]),
            });
        }
        let c = cond.expect("non-default item has values");
        let t_env = self.exec(scope, &first.body, env.clone());
        let f_env = self.exec_case(scope, sel, rest, env.clone());
        self.merge(c, &env, t_env, f_env)
    }

    fn merge(&mut self, cond: Operand, before: &Env, t_env: Env, f_env: Env) -> Env {
        let mut out = before.clone();
        let keys: std::collections::BTreeSet<usize> = t_env.keys().chain(f_env.keys()).copied().collect();
        for k in keys {
            let hold = before.get(&k).copied().unwrap_or(Operand::Signal(k));
            let t = t_env.get(&k).copied().unwrap_or(hold);
            let f = f_env.get(&k).copied().unwrap_or(hold);
            let value = if t == f { t } else { self.push_expr("Branch", None, vec![cond, t, f]) };
            out.insert(k, value);
        }
        out
    }
}

/// DFS preorder from `roots`, visiting children in order. Every child
/// relation yields an edge, including those to already visited nodes.
fn preorder<N, F>(roots: &[N], mut children: F) -> (Vec<N>, Vec<GraphEdge>)
where
    N: Copy + Eq + std::hash::Hash,
    F: FnMut(&N) -> Vec<N>,
{
    let mut ids: HashMap<N, usize> = HashMap::new();
    let mut order = Vec::new();
    let mut edges = Vec::new();
    let visit = |n: N, order: &mut Vec<N>, ids: &mut HashMap<N, usize>| -> Option<usize> {
        if ids.contains_key(&n) {
            return None;
        }
        let id = order.len();
        ids.insert(n, id);
        order.push(n);
        Some(id)
    };
    for &root in roots {
        let Some(_) = visit(root, &mut order, &mut ids) else {
            continue;
        };
        let mut stack: Vec<(N, Vec<N>, usize)> = vec![(root, children(&root), 0)];
        while let Some(top) = stack.last_mut() {
            if top.2 == top.1.len() {
                stack.pop();
                continue;
            }
            let child = top.1[top.2];
            top.2 += 1;
            let src = ids[&top.0];
            let fresh = visit(child, &mut order, &mut ids).is_some();
            edges.push(GraphEdge { src, dst: ids[&child] });
            if fresh {
                let c = children(&child);
                stack.push((child, c, 0));
            }
        }
    }
    (order, edges)
}

/// Data-flow fragment rooted at `signal` in the elaborated top module.
pub fn dfg_for_signal(tree: &ParseTree, signal: &str) -> Result<DfgFragment, HwGraphError> {
    Elaboration::new(tree, super::DEFAULT_MAX_DEPTH)?.fragment(signal)
}

/// Unifies fragments by node key and renumbers in DFS preorder from the
/// fragment roots, in order.
pub fn merge_dfgs(fragments: &[DfgFragment]) -> HwGraph {
    let mut index: HashMap<&NodeKey, usize> = HashMap::new();
    let mut nodes: Vec<(&NodeKey, &GraphNode)> = Vec::new();
    let mut children: Vec<Vec<usize>> = Vec::new();
    let mut roots = Vec::new();
    for f in fragments {
        let local: Vec<usize> = f
            .keys
            .iter()
            .zip(&f.graph.nodes)
            .map(|(k, n)| {
                *index.entry(k).or_insert_with(|| {
                    nodes.push((k, n));
                    children.push(Vec::new());
                    nodes.len() - 1
                })
            })
            .collect();
        if let Some(&r) = local.first() {
            roots.push(r);
        }
        for (src, cs) in f.children.iter().enumerate() {
            let g_src = local[src];
            for &c in cs {
                let g_dst = local[c];
                if !children[g_src].contains(&g_dst) {
                    children[g_src].push(g_dst);
                }
            }
        }
    }
    let (order, edges) = preorder(&roots, |&v| children[v].clone());
    let graph_nodes = order
        .iter()
        .enumerate()
        .map(|(id, &v)| GraphNode {
            id,
            label: nodes[v].1.label.clone(),
            name: nodes[v].1.name.clone(),
        })
        .collect();
    let mut g = HwGraph {
        design: fragments.first().map(|f| f.graph.design.clone()).unwrap_or_default(),
        kind: GraphKind::Dfg,
        nodes: graph_nodes,
        edges,
    };
    g.canonicalize();
    g
}

/// Every label a data-flow node can carry before normalization.
pub fn dfg_labels() -> Vec<&'static str> {
    let mut labels = vec![
        "signal",
        "const",
        "input",
        "output",
        "Branch",
        "Concat",
        "Repeat",
        "Pointer",
        "Partselect",
    ];
    labels.extend(UnaryOp::ALL.iter().map(|op| op.label()));
    labels.extend(BinaryOp::ALL.iter().map(|op| op.label()));
    labels.extend(
        [
            Gate::And,
            Gate::Or,
            Gate::Nand,
            Gate::Nor,
            Gate::Xor,
            Gate::Xnor,
            Gate::Not,
            Gate::Buf,
        ]
        .iter()
        .map(|g| g.label()),
    );
    labels.sort_unstable();
    labels.dedup();
    labels
}
