//! Structural features of a contract: how it stores participants and how its
//! payout code moves value.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::ast::*;
use crate::fold::Constants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    ParentLinkMapping,
    InvestorArray,
    SingleLastDepositor,
    ParentWalk,
    FifoMultiplier,
    ProRata,
    SingleForward,
    EntryFeeDoubling,
    MinDepositGuard,
    OwnerFee,
}

impl Feature {
    pub fn name(self) -> &'static str {
        match self {
            Feature::ParentLinkMapping => "has_parent_link_mapping",
            Feature::InvestorArray => "has_investor_array",
            Feature::SingleLastDepositor => "has_single_last_depositor",
            Feature::ParentWalk => "payout_parent_walk",
            Feature::FifoMultiplier => "payout_fifo_multiplier",
            Feature::ProRata => "payout_pro_rata",
            Feature::SingleForward => "payout_single_forward",
            Feature::EntryFeeDoubling => "entry_fee_doubling",
            Feature::MinDepositGuard => "min_deposit_guard",
            Feature::OwnerFee => "owner_fee",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where a feature was observed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Evidence {
    pub feature: Feature,
    pub span: Span,
}

/// A `.send(x)` or single-argument `.transfer(x)` call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SendSite {
    pub function: String,
    pub span: Span,
    pub receiver: String,
    pub method: String,
    /// The outcome reaches a condition (or `.transfer`, which reverts on failure).
    pub checked: bool,
    pub in_loop: bool,
}

/// Overflow-prone arithmetic that writes storage or feeds a transfer amount.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArithSite {
    pub function: String,
    pub span: Span,
    pub op: String,
}

/// `a[i]` on a dynamic storage array without a dominating `i < a.length`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexSite {
    pub function: String,
    pub span: Span,
    pub array: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContractFingerprint {
    pub contract: String,
    pub has_parent_link_mapping: bool,
    pub has_investor_array: bool,
    pub has_single_last_depositor: bool,
    pub payout_parent_walk: bool,
    pub payout_fifo_multiplier: (bool, Option<BigRational>),
    pub payout_pro_rata: bool,
    pub payout_single_forward: bool,
    pub entry_fee_doubling: bool,
    /// Threshold in wei when it folds to a constant.
    pub min_deposit_guard: (bool, Option<BigUint>),
    pub owner_fee: (bool, Option<BigRational>),
    pub send_sites: Vec<SendSite>,
    pub unguarded_arith_sites: Vec<ArithSite>,
    pub dynamic_index_sites: Vec<IndexSite>,
    pub evidence: Vec<Evidence>,
}

impl ContractFingerprint {
    pub fn storage_features(&self) -> usize {
        [self.has_parent_link_mapping, self.has_investor_array, self.has_single_last_depositor]
            .into_iter()
            .filter(|b| *b)
            .count()
    }

    pub fn payout_shapes(&self) -> usize {
        [self.payout_parent_walk, self.payout_fifo_multiplier.0, self.payout_pro_rata, self.payout_single_forward]
            .into_iter()
            .filter(|b| *b)
            .count()
    }

    /// First recorded location of `feature`.
    pub fn evidence_for(&self, feature: Feature) -> Option<Span> {
        self.evidence.iter().find(|e| e.feature == feature).map(|e| e.span)
    }

    fn note(&mut self, feature: Feature, span: Span) {
        if !self.evidence.iter().any(|e| e.feature == feature && e.span == span) {
            self.evidence.push(Evidence { feature, span });
        }
    }
}

pub fn extract_fingerprint(contract: &ContractDef) -> ContractFingerprint {
    let ctx = Ctx::new(contract);
    let units = ctx.units();
    let mut fp = ContractFingerprint { contract: contract.name.clone(), ..Default::default() };

    storage_shape(&ctx, &units, &mut fp);
    for unit in &units {
        let sends = send_sites_in(&unit.name, unit.stmts);
        parent_walk(&ctx, unit, &mut fp);
        fifo_multiplier(&ctx, unit, &mut fp);
        pro_rata(&ctx, unit, &mut fp);
        single_forward(&ctx, &sends, &mut fp);
        entry_fee_doubling(&ctx, unit, &mut fp);
        min_deposit(&ctx, unit, &mut fp);
        owner_fee(&ctx, unit, &sends, &mut fp);
        arith_sites(&ctx, unit, &sends, &mut fp);
        index_sites(&ctx, unit, &mut fp);
        fp.send_sites.extend(sends);
    }
    fp.send_sites.sort_by_key(|s| s.span);
    fp.unguarded_arith_sites.sort_by_key(|s| s.span);
    fp.dynamic_index_sites.sort_by_key(|s| s.span);
    fp.evidence.sort_by_key(|e| (e.feature, e.span));
    fp
}

/// Send sites of one function, in source order.
pub fn checked_send_analysis(function: &FunctionDef) -> Vec<SendSite> {
    match &function.body {
        Some(body) => send_sites_in(&function.name(), body),
        None => Vec::new(),
    }
}

// ---- context

struct InvestorArray {
    name: String,
    /// `None` for `address[]`.
    addr_field: Option<String>,
}

struct Ctx<'c> {
    contract: &'c ContractDef,
    consts: Constants,
    state: HashMap<&'c str, &'c TypeName>,
    /// (mapping, address field) pairs of `mapping(address => S)` with `S` holding an address.
    parent_links: Vec<(String, String)>,
    investor_arrays: Vec<InvestorArray>,
}

/// A function or modifier body plus the names it binds locally.
struct Unit<'a> {
    name: String,
    stmts: &'a [Stmt],
    params: Vec<String>,
    locals: HashSet<String>,
    is_constructor: bool,
}

impl<'c> Ctx<'c> {
    fn new(contract: &'c ContractDef) -> Self {
        let state: HashMap<&str, &TypeName> = contract.state_vars.iter().map(|v| (v.name.as_str(), &v.ty)).collect();
        let struct_fields = |ty: &TypeName| -> Option<&'c StructDef> {
            match ty {
                TypeName::UserDefined(name) => contract.struct_def(name),
                _ => None,
            }
        };

        let mut parent_links = Vec::new();
        let mut investor_arrays = Vec::new();
        let has_addr_to_uint_mapping = contract
            .state_vars
            .iter()
            .any(|v| matches!(&v.ty, TypeName::Mapping(k, val) if k.is_address() && val.is_unsigned()));
        for var in &contract.state_vars {
            match &var.ty {
                TypeName::Mapping(key, value) if key.is_address() => {
                    if let Some(s) = struct_fields(value) {
                        for field in s.fields.iter().filter(|f| f.ty.is_address()) {
                            parent_links.push((var.name.clone(), field.name.clone().unwrap_or_default()));
                        }
                    }
                }
                TypeName::Array(elem, None) => {
                    if let Some(s) = struct_fields(elem) {
                        if s.has_field_of(TypeName::is_address) && s.has_field_of(TypeName::is_unsigned) {
                            let addr_field = s.fields.iter().find(|f| f.ty.is_address()).and_then(|f| f.name.clone());
                            investor_arrays.push(InvestorArray { name: var.name.clone(), addr_field });
                        }
                    } else if elem.is_address() && has_addr_to_uint_mapping {
                        investor_arrays.push(InvestorArray { name: var.name.clone(), addr_field: None });
                    }
                }
                _ => {}
            }
        }
        Ctx { contract, consts: Constants::from_contract(contract), state, parent_links, investor_arrays }
    }

    fn units(&self) -> Vec<Unit<'c>> {
        let mut units = Vec::new();
        for f in &self.contract.functions {
            let Some(body) = &f.body else { continue };
            let params: Vec<String> = f.params.iter().filter_map(|p| p.name.clone()).collect();
            let mut locals: HashSet<String> = params.iter().cloned().collect();
            locals.extend(f.returns.iter().filter_map(|p| p.name.clone()));
            collect_decls(body, &mut locals);
            units.push(Unit {
                name: f.name(),
                stmts: body,
                params,
                locals,
                is_constructor: f.kind == FunctionKind::Constructor,
            });
        }
        for m in &self.contract.modifiers {
            let params: Vec<String> = m.params.iter().filter_map(|p| p.name.clone()).collect();
            let mut locals: HashSet<String> = params.iter().cloned().collect();
            collect_decls(&m.body, &mut locals);
            units.push(Unit { name: m.name.clone(), stmts: &m.body, params, locals, is_constructor: false });
        }
        units
    }

    fn is_state(&self, unit: &Unit, name: &str) -> bool {
        !unit.locals.contains(name) && self.state.contains_key(name)
    }

    fn state_ty(&self, unit: &Unit, name: &str) -> Option<&'c TypeName> {
        if unit.locals.contains(name) {
            None
        } else {
            self.state.get(name).copied()
        }
    }

    fn investor_array(&self, unit: &Unit, name: &str) -> Option<&InvestorArray> {
        if unit.locals.contains(name) {
            return None;
        }
        self.investor_arrays.iter().find(|a| a.name == name)
    }

    /// Constant value of `e`, reading foldable state-variable initializers.
    fn value_of(&self, e: &Expr) -> Option<BigRational> {
        self.consts.eval(e)
    }
}

fn collect_decls(stmts: &[Stmt], out: &mut HashSet<String>) {
    for s in stmts {
        s.walk(&mut |st| {
            if let StmtKind::VarDecl { name, .. } = &st.kind {
                out.insert(name.clone());
            }
        });
    }
}

/// Every value assigned to each local (declaration initializers and plain `=`).
fn local_defs<'a>(unit: &Unit<'a>) -> HashMap<String, Vec<&'a Expr>> {
    let mut defs: HashMap<String, Vec<&'a Expr>> = HashMap::new();
    for s in unit.stmts {
        s.walk(&mut |st| {
            if let StmtKind::VarDecl { name, init: Some(init), .. } = &st.kind {
                defs.entry(name.clone()).or_default().push(init);
            }
        });
    }
    walk_exprs(unit.stmts, &mut |e| {
        if let ExprKind::Assign { op: AssignOp::Assign, target, value } = &e.kind {
            if let Some(name) = target.as_ident() {
                if unit.locals.contains(name) {
                    defs.entry(name.to_string()).or_default().push(value);
                }
            }
        }
    });
    defs
}

/// Locals whose value flows from an expression satisfying `seed`, to a fixpoint.
fn derived_locals(unit: &Unit, defs: &HashMap<String, Vec<&Expr>>, seed: &dyn Fn(&Expr) -> bool) -> HashSet<String> {
    let mut out: HashSet<String> = HashSet::new();
    loop {
        let mut changed = false;
        for (name, values) in defs {
            if out.contains(name) || !unit.locals.contains(name) {
                continue;
            }
            if values.iter().any(|v| v.any(|e| seed(e) || e.as_ident().is_some_and(|i| out.contains(i)))) {
                out.insert(name.clone());
                changed = true;
            }
        }
        if !changed {
            return out;
        }
    }
}

fn value_derived(unit: &Unit, defs: &HashMap<String, Vec<&Expr>>) -> HashSet<String> {
    derived_locals(unit, defs, &|e| e.is_msg_value())
}

/// `c` such that `e == c * base` for a constant `c`, if `e` has that shape.
fn linear_coeff(e: &Expr, consts: &Constants, is_base: &dyn Fn(&Expr) -> bool) -> Option<BigRational> {
    let e = e.unparen();
    if is_base(e) {
        return Some(BigRational::one());
    }
    match &e.kind {
        ExprKind::Binary { op: BinOp::Mul, lhs, rhs } => {
            if let (Some(c), Some(k)) = (linear_coeff(lhs, consts, is_base), consts.eval(rhs)) {
                return Some(c * k);
            }
            let (k, c) = (consts.eval(lhs)?, linear_coeff(rhs, consts, is_base)?);
            Some(c * k)
        }
        ExprKind::Binary { op: BinOp::Div, lhs, rhs } => {
            let (c, k) = (linear_coeff(lhs, consts, is_base)?, consts.eval(rhs)?);
            (!k.is_zero()).then(|| c / k)
        }
        ExprKind::Call { callee, args } if args.len() == 1 && matches!(callee.kind, ExprKind::TypeExpr(_)) => {
            linear_coeff(&args[0], consts, is_base)
        }
        _ => None,
    }
}

/// The expression(s) a send amount stands for: the argument itself, or the
/// values assigned to it when it is a local.
fn amount_values<'a>(arg: &'a Expr, defs: &HashMap<String, Vec<&'a Expr>>) -> Vec<&'a Expr> {
    match arg.unparen().as_ident().and_then(|n| defs.get(n)) {
        Some(values) => values.clone(),
        None => vec![arg],
    }
}

fn send_call(e: &Expr) -> Option<(&Expr, &str, &Expr)> {
    let (receiver, method, args) = e.as_method_call()?;
    (matches!(method, "send" | "transfer") && args.len() == 1).then(|| (receiver, method, &args[0]))
}

fn is_assert_like(e: &Expr) -> Option<&[Expr]> {
    match e.as_named_call() {
        Some(("require" | "assert", args)) => Some(args),
        _ => None,
    }
}

/// Branch that aborts the call: `throw`, `revert(...)`, `return`, or a block ending in one.
fn is_reject(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Throw | StmtKind::Return(_) => true,
        StmtKind::Expr(e) => matches!(e.as_named_call(), Some(("revert", _))),
        StmtKind::Block(stmts) => stmts.last().is_some_and(is_reject),
        _ => false,
    }
}

fn loops(stmts: &[Stmt]) -> Vec<&Stmt> {
    let mut out = Vec::new();
    for s in stmts {
        s.walk(&mut |st| {
            if st.is_loop() {
                out.push(st);
            }
        });
    }
    out
}

/// Every expression of a loop: its condition, update and body.
fn loop_exprs(l: &Stmt) -> Vec<&Expr> {
    let mut out = Vec::new();
    l.walk(&mut |st| {
        for e in st.own_exprs() {
            e.walk(&mut |x| out.push(x));
        }
    });
    out
}

// ---- storage shape

fn storage_shape(ctx: &Ctx, units: &[Unit], fp: &mut ContractFingerprint) {
    for unit in units {
        walk_exprs(unit.stmts, &mut |e| {
            if let ExprKind::Member { base, member } = &e.kind {
                if let ExprKind::Index { base: m, .. } = &base.kind {
                    if let Some(name) = m.as_ident() {
                        if ctx.is_state(unit, name)
                            && ctx.parent_links.iter().any(|(pm, pf)| pm == name && pf == member)
                        {
                            fp.has_parent_link_mapping = true;
                            fp.note(Feature::ParentLinkMapping, e.span);
                        }
                    }
                }
            }
            if let ExprKind::Assign { op: AssignOp::Assign, target, value } = &e.kind {
                if !unit.is_constructor && value.is_msg_sender() {
                    if let Some(name) = target.as_ident() {
                        if ctx.state_ty(unit, name).is_some_and(TypeName::is_address) {
                            fp.has_single_last_depositor = true;
                            fp.note(Feature::SingleLastDepositor, e.span);
                        }
                    }
                }
            }
        });
    }
    for a in &ctx.investor_arrays {
        if let Some(v) = ctx.contract.state_var(&a.name) {
            fp.has_investor_array = true;
            fp.note(Feature::InvestorArray, v.span);
        }
    }
}

fn last_depositors(ctx: &Ctx, units: &[Unit]) -> HashSet<String> {
    let mut out = HashSet::new();
    for unit in units.iter().filter(|u| !u.is_constructor) {
        walk_exprs(unit.stmts, &mut |e| {
            if let ExprKind::Assign { op: AssignOp::Assign, target, value } = &e.kind {
                if let Some(name) = target.as_ident() {
                    if value.is_msg_sender() && ctx.state_ty(unit, name).is_some_and(TypeName::is_address) {
                        out.insert(name.to_string());
                    }
                }
            }
        });
    }
    out
}

// ---- payout shapes

fn parent_walk(ctx: &Ctx, unit: &Unit, fp: &mut ContractFingerprint) {
    let defs = local_defs(unit);
    for l in loops(unit.stmts) {
        let exprs = loop_exprs(l);
        // `v = M[v].F` with (M, F) a parent link
        let walkers: Vec<&str> = exprs
            .iter()
            .filter_map(|e| match &e.kind {
                ExprKind::Assign { op: AssignOp::Assign, target, value } => {
                    let v = target.as_ident()?;
                    let ExprKind::Member { base, member } = &value.unparen().kind else { return None };
                    let ExprKind::Index { base: m, index: Some(idx) } = &base.kind else { return None };
                    let m = m.as_ident()?;
                    let linked = ctx.parent_links.iter().any(|(pm, pf)| pm == m && pf == member);
                    (linked && ctx.is_state(unit, m) && idx.as_ident() == Some(v)).then_some(v)
                }
                _ => None,
            })
            .collect();
        if walkers.is_empty() {
            continue;
        }
        for e in &exprs {
            let Some((receiver, _, arg)) = send_call(e) else { continue };
            let Some(r) = receiver.unparen().as_ident() else { continue };
            if !walkers.contains(&r) {
                continue;
            }
            let divided = amount_values(arg, &defs).into_iter().any(|v| match &v.unparen().kind {
                ExprKind::Binary { op: BinOp::Div, rhs, .. } => {
                    ctx.value_of(rhs).is_some_and(|k| k >= BigRational::from_integer(2.into()))
                }
                _ => false,
            });
            if divided {
                fp.payout_parent_walk = true;
                fp.note(Feature::ParentWalk, l.span);
            }
        }
    }
}

fn fifo_multiplier(ctx: &Ctx, unit: &Unit, fp: &mut ContractFingerprint) {
    let defs = local_defs(unit);
    for l in loops(unit.stmts) {
        for e in loop_exprs(l) {
            let Some((receiver, _, arg)) = send_call(e) else { continue };
            let mut target = None;
            receiver.walk(&mut |x| {
                if let ExprKind::Index { base, .. } = &x.kind {
                    if let Some(a) = base.as_ident().and_then(|n| ctx.investor_array(unit, n)) {
                        target.get_or_insert(a);
                    }
                }
            });
            let Some(array) = target else { continue };
            let is_stored_amount = |x: &Expr| match &x.kind {
                ExprKind::Member { base, member } => {
                    Some(member.as_str()) != array.addr_field.as_deref()
                        && matches!(&base.kind, ExprKind::Index { base: b, .. } if b.as_ident() == Some(&array.name))
                }
                _ => false,
            };
            let multiplier = amount_values(arg, &defs)
                .into_iter()
                .find_map(|v| linear_coeff(v, &ctx.consts, &is_stored_amount))
                .filter(|m| m.is_positive());
            if let Some(m) = multiplier {
                if !fp.payout_fifo_multiplier.0 {
                    fp.payout_fifo_multiplier = (true, Some(m));
                }
                fp.note(Feature::FifoMultiplier, l.span);
            }
        }
    }
}

fn pro_rata(ctx: &Ctx, unit: &Unit, fp: &mut ContractFingerprint) {
    for l in loops(unit.stmts) {
        let cond = match &l.kind {
            StmtKind::While { cond, .. } | StmtKind::DoWhile { cond, .. } => Some(cond),
            StmtKind::For { cond, .. } => cond.as_ref(),
            _ => None,
        };
        let Some(cond) = cond else { continue };
        let mut arrays = HashSet::new();
        cond.walk(&mut |x| {
            if let ExprKind::Member { base, member } = &x.kind {
                if member == "length" {
                    if let Some(a) = base.as_ident().and_then(|n| ctx.investor_array(unit, n)) {
                        arrays.insert(a.name.clone());
                    }
                }
            }
        });
        if arrays.is_empty() {
            continue;
        }
        // weight `W[A[i]]` with W a storage mapping and A an investor array
        let is_weight = |x: &Expr| match &x.kind {
            ExprKind::Index { base, index: Some(idx) } => {
                let mapping = base
                    .as_ident()
                    .and_then(|n| ctx.state_ty(unit, n))
                    .is_some_and(|t| matches!(t, TypeName::Mapping(..)));
                let by_investor = matches!(&idx.unparen().kind,
                    ExprKind::Index { base: a, .. } if a.as_ident().is_some_and(|n| arrays.contains(n)));
                mapping && by_investor
            }
            _ => false,
        };
        let is_share = |v: &Expr| {
            v.any(|x| match &x.kind {
                ExprKind::Binary { op: BinOp::Div, lhs, rhs } => lhs.any(is_weight) && ctx.value_of(rhs).is_none(),
                _ => false,
            })
        };
        for e in loop_exprs(l) {
            let hit = match &e.kind {
                ExprKind::Assign { op: AssignOp::Add, value, .. } => is_share(value),
                _ => send_call(e).is_some_and(|(_, _, arg)| is_share(arg)),
            };
            if hit {
                fp.payout_pro_rata = true;
                fp.note(Feature::ProRata, l.span);
            }
        }
    }
}

fn single_forward(ctx: &Ctx, sends: &[SendSite], fp: &mut ContractFingerprint) {
    let units = ctx.units();
    let last = last_depositors(ctx, &units);
    for s in sends.iter().filter(|s| !s.in_loop) {
        if last.contains(&s.receiver) {
            fp.payout_single_forward = true;
            fp.note(Feature::SingleForward, s.span);
        }
    }
}

fn entry_fee_doubling(ctx: &Ctx, unit: &Unit, fp: &mut ContractFingerprint) {
    let defs = local_defs(unit);
    let tainted = value_derived(unit, &defs);
    let is_value = |x: &Expr| x.is_msg_value() || x.as_ident().is_some_and(|n| tainted.contains(n));
    let two = BigRational::from_integer(2.into());
    walk_exprs(unit.stmts, &mut |e| {
        if let ExprKind::Assign { op: AssignOp::Assign, target, value } = &e.kind {
            let to_state = target.as_ident().is_some_and(|n| ctx.is_state(unit, n));
            if to_state && linear_coeff(value, &ctx.consts, &is_value) == Some(two.clone()) {
                fp.entry_fee_doubling = true;
                fp.note(Feature::EntryFeeDoubling, e.span);
            }
        }
    });
}

// ---- guards

/// An atomic comparison known to hold at some program point.
#[derive(Debug, Clone, Copy)]
struct Fact<'a> {
    op: BinOp,
    lhs: &'a Expr,
    rhs: &'a Expr,
}

impl Fact<'_> {
    fn mentions(&self, name: &str) -> bool {
        self.lhs.mentions_ident(name) || self.rhs.mentions_ident(name)
    }
}

fn negate(op: BinOp) -> BinOp {
    match op {
        BinOp::Lt => BinOp::Ge,
        BinOp::Le => BinOp::Gt,
        BinOp::Gt => BinOp::Le,
        BinOp::Ge => BinOp::Lt,
        BinOp::Eq => BinOp::Ne,
        BinOp::Ne => BinOp::Eq,
        other => other,
    }
}

/// Comparisons implied by `e` evaluating to `holds`.
fn atoms(e: &Expr, holds: bool) -> Vec<Fact<'_>> {
    match &e.unparen().kind {
        ExprKind::Unary { op: UnOp::Not, operand } => atoms(operand, !holds),
        ExprKind::Binary { op: BinOp::And, lhs, rhs } if holds => {
            let mut v = atoms(lhs, true);
            v.extend(atoms(rhs, true));
            v
        }
        ExprKind::Binary { op: BinOp::Or, lhs, rhs } if !holds => {
            let mut v = atoms(lhs, false);
            v.extend(atoms(rhs, false));
            v
        }
        ExprKind::Binary { op, lhs, rhs } if op.is_relational() || matches!(op, BinOp::Eq | BinOp::Ne) => {
            vec![Fact { op: if holds { *op } else { negate(*op) }, lhs, rhs }]
        }
        _ => Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Condition,
    Plain,
}

enum Visit<'a> {
    Expr(&'a Expr, Role),
    Decl { name: &'a str, init: &'a Expr, stmt: &'a Stmt },
}

/// Walks statements in order, tracking the comparisons that dominate each
/// point: enclosing branch and loop conditions, earlier `require`/`assert`
/// calls and earlier early-exit `if`s in the same block.
fn walk_guarded<'a>(
    stmts: &'a [Stmt],
    facts: &mut Vec<Fact<'a>>,
    in_loop: bool,
    visit: &mut dyn FnMut(Visit<'a>, &[Fact<'a>], bool),
) {
    let mark = facts.len();
    for s in stmts {
        walk_stmt(s, facts, in_loop, visit);
        match &s.kind {
            StmtKind::Expr(e) => {
                if let Some(args) = is_assert_like(e) {
                    if let Some(c) = args.first() {
                        facts.extend(atoms(c, true));
                    }
                }
            }
            StmtKind::If { cond, then, otherwise: None } if is_reject(then) => facts.extend(atoms(cond, false)),
            _ => {}
        }
    }
    facts.truncate(mark);
}

fn walk_stmt<'a>(
    s: &'a Stmt,
    facts: &mut Vec<Fact<'a>>,
    in_loop: bool,
    visit: &mut dyn FnMut(Visit<'a>, &[Fact<'a>], bool),
) {
    let nested = |s: &'a Stmt,
                  facts: &mut Vec<Fact<'a>>,
                  extra: Vec<Fact<'a>>,
                  in_loop: bool,
                  visit: &mut dyn FnMut(Visit<'a>, &[Fact<'a>], bool)| {
        let mark = facts.len();
        facts.extend(extra);
        walk_guarded(std::slice::from_ref(s), facts, in_loop, visit);
        facts.truncate(mark);
    };
    match &s.kind {
        StmtKind::Block(stmts) => walk_guarded(stmts, facts, in_loop, visit),
        StmtKind::If { cond, then, otherwise } => {
            visit(Visit::Expr(cond, Role::Condition), facts, in_loop);
            nested(then, facts, atoms(cond, true), in_loop, visit);
            if let Some(o) = otherwise {
                nested(o, facts, atoms(cond, false), in_loop, visit);
            }
        }
        StmtKind::While { cond, body } => {
            visit(Visit::Expr(cond, Role::Condition), facts, true);
            nested(body, facts, atoms(cond, true), true, visit);
        }
        StmtKind::DoWhile { body, cond } => {
            nested(body, facts, Vec::new(), true, visit);
            visit(Visit::Expr(cond, Role::Condition), facts, true);
        }
        StmtKind::For { init, cond, update, body } => {
            let mark = facts.len();
            if let Some(i) = init {
                walk_stmt(i, facts, in_loop, visit);
            }
            if let Some(c) = cond {
                visit(Visit::Expr(c, Role::Condition), facts, true);
                facts.extend(atoms(c, true));
            }
            if let Some(u) = update {
                visit(Visit::Expr(u, Role::Plain), facts, true);
            }
            nested(body, facts, Vec::new(), true, visit);
            facts.truncate(mark);
        }
        StmtKind::VarDecl { name, init: Some(init), .. } => {
            visit(Visit::Decl { name, init, stmt: s }, facts, in_loop);
            visit(Visit::Expr(init, Role::Plain), facts, in_loop);
        }
        StmtKind::Expr(e) | StmtKind::Emit(e) | StmtKind::Return(Some(e)) => {
            visit(Visit::Expr(e, Role::Plain), facts, in_loop)
        }
        _ => {}
    }
}

/// Pre-order walk of an expression where the right operand of `&&` / `||`
/// also sees the facts established by the left operand.
fn walk_expr_guarded<'a>(e: &'a Expr, facts: &mut Vec<Fact<'a>>, f: &mut dyn FnMut(&'a Expr, &[Fact<'a>])) {
    match &e.kind {
        ExprKind::Binary { op: op @ (BinOp::And | BinOp::Or), lhs, rhs } => {
            f(e, facts);
            walk_expr_guarded(lhs, facts, f);
            let mark = facts.len();
            facts.extend(atoms(lhs, *op == BinOp::And));
            walk_expr_guarded(rhs, facts, f);
            facts.truncate(mark);
        }
        ExprKind::Ternary { cond, then, otherwise } => {
            f(e, facts);
            walk_expr_guarded(cond, facts, f);
            let mark = facts.len();
            facts.extend(atoms(cond, true));
            walk_expr_guarded(then, facts, f);
            facts.truncate(mark);
            facts.extend(atoms(cond, false));
            walk_expr_guarded(otherwise, facts, f);
            facts.truncate(mark);
        }
        _ => {
            f(e, facts);
            let mut children: Vec<&'a Expr> = Vec::new();
            match &e.kind {
                ExprKind::Member { base, .. } => children.push(base),
                ExprKind::Index { base, index } => {
                    children.push(base);
                    children.extend(index.as_deref());
                }
                ExprKind::Call { callee, args } => {
                    children.push(callee);
                    children.extend(args.iter());
                }
                ExprKind::Binary { lhs, rhs, .. } => children.extend([&**lhs, &**rhs]),
                ExprKind::Unary { operand, .. } => children.push(operand),
                ExprKind::Assign { target, value, .. } => children.extend([&**target, &**value]),
                ExprKind::Tuple(items) => children.extend(items.iter().flatten()),
                _ => {}
            }
            for c in children {
                walk_expr_guarded(c, facts, f);
            }
        }
    }
}

// ---- send sites

fn send_sites_in(function: &str, stmts: &[Stmt]) -> Vec<SendSite> {
    // Locals holding a send result, and every expression that is tested.
    let mut tested: Vec<&Expr> = Vec::new();
    let mut sites: Vec<(SendSite, Option<String>)> = Vec::new();
    let mut facts = Vec::new();
    walk_guarded(stmts, &mut facts, false, &mut |v, _, in_loop| {
        let (e, role) = match v {
            Visit::Expr(e, role) => (e, role),
            Visit::Decl { name, init, .. } => {
                if let Some((receiver, method, _)) = send_call(init.unparen()) {
                    let site = new_site(function, init.unparen(), receiver, method, false, in_loop);
                    sites.push((site, Some(name.to_string())));
                }
                return;
            }
        };
        if role == Role::Condition {
            tested.push(e);
        }
        if let Some(args) = is_assert_like(e) {
            tested.extend(args.iter());
        }
        e.walk(&mut |x| {
            if let Some(args) = is_assert_like(x) {
                tested.extend(args.iter());
            }
        });
        // `ok = x.send(v)` records the holder
        if let ExprKind::Assign { op: AssignOp::Assign, target, value } = &e.kind {
            if let (Some(name), Some((receiver, method, _))) = (target.as_ident(), send_call(value.unparen())) {
                let site = new_site(function, value.unparen(), receiver, method, false, in_loop);
                sites.push((site, Some(name.to_string())));
                return;
            }
        }
        e.walk(&mut |x| {
            if let Some((receiver, method, _)) = send_call(x) {
                let in_cond = role == Role::Condition;
                sites.push((new_site(function, x, receiver, method, in_cond, in_loop), None));
            }
        });
    });
    let mut out: Vec<SendSite> = sites
        .into_iter()
        .map(|(mut site, holder)| {
            let inside_test = tested.iter().any(|t| t.span.contains(&site.span));
            let holder_tested =
                holder.is_some_and(|h| tested.iter().any(|t| t.span.start > site.span.start && t.mentions_ident(&h)));
            site.checked |= inside_test || holder_tested || site.method == "transfer";
            site
        })
        .collect();
    // a declaration initializer is also visited as a plain expression
    out.sort_by_key(|s| s.span);
    out.dedup_by(|later, first| {
        let same = later.span == first.span;
        if same {
            first.checked |= later.checked;
        }
        same
    });
    out
}

fn new_site(function: &str, call: &Expr, receiver: &Expr, method: &str, checked: bool, in_loop: bool) -> SendSite {
    SendSite {
        function: function.to_string(),
        span: call.span,
        receiver: receiver.to_string(),
        method: method.to_string(),
        checked,
        in_loop,
    }
}

// ---- deposit guard and fee

fn min_deposit(ctx: &Ctx, unit: &Unit, fp: &mut ContractFingerprint) {
    let defs = local_defs(unit);
    let tainted = value_derived(unit, &defs);
    let is_value = |x: &Expr| x.unparen().is_msg_value() || x.unparen().as_ident().is_some_and(|n| tainted.contains(n));

    // Comparisons that must hold for the deposit to be accepted.
    let mut accepted: Vec<(Fact, Span)> = Vec::new();
    for s in unit.stmts {
        s.walk(&mut |st| match &st.kind {
            StmtKind::If { cond, then, .. } => {
                let holds = !is_reject(then);
                accepted.extend(atoms(cond, holds).into_iter().map(|f| (f, st.span)));
            }
            StmtKind::Expr(e) => {
                if let Some(c) = is_assert_like(e).and_then(|a| a.first()) {
                    accepted.extend(atoms(c, true).into_iter().map(|f| (f, st.span)));
                }
            }
            _ => {}
        });
    }
    for (fact, span) in accepted {
        // normalise to `value OP bound`
        let (op, bound) = if is_value(fact.lhs) {
            (fact.op, fact.rhs)
        } else if is_value(fact.rhs) {
            let flipped = match fact.op {
                BinOp::Lt => BinOp::Gt,
                BinOp::Le => BinOp::Ge,
                BinOp::Gt => BinOp::Lt,
                BinOp::Ge => BinOp::Le,
                other => other,
            };
            (flipped, fact.lhs)
        } else {
            continue;
        };
        if !matches!(op, BinOp::Gt | BinOp::Ge) {
            continue;
        }
        let bound_is_const = ctx.value_of(bound).is_some();
        let bound_is_state = bound.unparen().as_ident().is_some_and(|n| ctx.is_state(unit, n));
        if !(bound_is_const || bound_is_state) {
            continue;
        }
        let wei = ctx
            .value_of(bound)
            .filter(|v| v.is_integer() && !v.is_negative())
            .and_then(|v| v.to_integer().to_biguint());
        if !fp.min_deposit_guard.0 {
            fp.min_deposit_guard = (true, wei);
        }
        fp.note(Feature::MinDepositGuard, span);
    }
}

fn owner_fee(ctx: &Ctx, unit: &Unit, sends: &[SendSite], fp: &mut ContractFingerprint) {
    let defs = local_defs(unit);
    let tainted = value_derived(unit, &defs);
    // Locals that hold msg.value unchanged at declaration.
    let aliases: HashSet<&str> = unit
        .stmts
        .iter()
        .flat_map(|s| {
            let mut v = Vec::new();
            s.walk(&mut |st| {
                if let StmtKind::VarDecl { name, init: Some(init), .. } = &st.kind {
                    if init.unparen().is_msg_value() {
                        v.push(name.as_str());
                    }
                }
            });
            v
        })
        .collect();
    let is_value = |x: &Expr| x.is_msg_value() || x.as_ident().is_some_and(|n| aliases.contains(n));
    let proper = |c: &BigRational| c.is_positive() && *c < BigRational::one();

    let mut found: Vec<(Option<BigRational>, Span)> = Vec::new();
    walk_exprs(unit.stmts, &mut |e| {
        // fee(msgValueDerived)
        if let Some((name, args)) = e.as_named_call() {
            let tainted_arg =
                args.iter().any(|a| a.any(|x| x.is_msg_value() || x.as_ident().is_some_and(|n| tainted.contains(n))));
            if name.to_lowercase().contains("fee") && tainted_arg {
                found.push((callee_fraction(ctx, name), e.span));
            }
        }
        // fee = msg.value * k
        if let ExprKind::Assign { op: AssignOp::Assign, target, value } = &e.kind {
            let named_fee = target.root_ident().is_some_and(|n| n.to_lowercase().contains("fee"));
            if let Some(c) = linear_coeff(value, &ctx.consts, &is_value).filter(proper) {
                if named_fee {
                    found.push((Some(c), e.span));
                }
            }
        }
    });
    for s in unit.stmts {
        s.walk(&mut |st| {
            if let StmtKind::VarDecl { name, init: Some(init), .. } = &st.kind {
                if name.to_lowercase().contains("fee") {
                    if let Some(c) = linear_coeff(init, &ctx.consts, &is_value).filter(proper) {
                        found.push((Some(c), st.span));
                    }
                }
            }
        });
    }
    // a constant fraction of the deposit sent straight to an owner-like address
    let owners = owner_like(ctx);
    walk_exprs(unit.stmts, &mut |e| {
        if let Some((receiver, _, arg)) = send_call(e) {
            let to_owner = receiver.as_ident().is_some_and(|n| owners.contains(n));
            if to_owner && sends.iter().any(|s| s.span == e.span) {
                if let Some(c) = amount_values(arg, &defs)
                    .into_iter()
                    .find_map(|v| linear_coeff(v, &ctx.consts, &is_value).filter(proper))
                {
                    found.push((Some(c), e.span));
                }
            }
        }
    });

    for (fraction, span) in found {
        if !fp.owner_fee.0 {
            fp.owner_fee = (true, fraction);
        } else if fp.owner_fee.1.is_none() && fraction.is_some() {
            fp.owner_fee.1 = fraction;
        }
        fp.note(Feature::OwnerFee, span);
    }
}

/// Fraction of its first argument that a fee helper computes, e.g. 1/2 for
/// `fee = amount / 2`.
fn callee_fraction(ctx: &Ctx, name: &str) -> Option<BigRational> {
    let f = ctx.contract.function(name)?;
    let param = f.params.first()?.name.clone()?;
    let body = f.body.as_ref()?;
    let is_param = |x: &Expr| x.as_ident() == Some(param.as_str());
    let mut fraction = None;
    walk_exprs(body, &mut |e| {
        if fraction.is_some() {
            return;
        }
        if let ExprKind::Assign { op: AssignOp::Assign, value, .. } = &e.kind {
            fraction = linear_coeff(value, &ctx.consts, &is_param).filter(|c| *c != BigRational::one());
        }
    });
    if fraction.is_none() {
        for s in body {
            s.walk(&mut |st| {
                if let (None, StmtKind::VarDecl { init: Some(init), .. } | StmtKind::Return(Some(init))) =
                    (&fraction, &st.kind)
                {
                    fraction = linear_coeff(init, &ctx.consts, &is_param).filter(|c| *c != BigRational::one());
                }
            });
        }
    }
    fraction
}

/// Address state variables set to `msg.sender` in the constructor, plus the
/// conventional owner names.
fn owner_like(ctx: &Ctx) -> HashSet<String> {
    let mut out: HashSet<String> =
        ["owner", "admin", "creator", "developer", "dev"].iter().map(|s| s.to_string()).collect();
    for f in ctx.contract.functions.iter().filter(|f| f.kind == FunctionKind::Constructor) {
        walk_exprs(f.body.as_deref().unwrap_or_default(), &mut |e| {
            if let ExprKind::Assign { op: AssignOp::Assign, target, value } = &e.kind {
                if let Some(n) = target.as_ident() {
                    if value.is_msg_sender() && ctx.state.get(n).is_some_and(|t| t.is_address()) {
                        out.insert(n.to_string());
                    }
                }
            }
        });
    }
    out
}

// ---- vulnerability raw material

fn arith_sites(ctx: &Ctx, unit: &Unit, sends: &[SendSite], fp: &mut ContractFingerprint) {
    let defs = local_defs(unit);
    // Locals passed straight to a send.
    let mut amount_locals: HashSet<String> = HashSet::new();
    walk_exprs(unit.stmts, &mut |e| {
        if let Some((_, _, arg)) = send_call(e) {
            if let Some(n) = arg.unparen().as_ident() {
                if unit.locals.contains(n) && !unit.params.iter().any(|p| p == n) {
                    amount_locals.insert(n.to_string());
                }
            }
        }
    });
    let derived =
        derived_locals(unit, &defs, &|e| e.is_msg_value() || e.as_ident().is_some_and(|n| ctx.is_state(unit, n)));
    let tainted = |e: &Expr| {
        e.any(|x| x.is_msg_value() || x.as_ident().is_some_and(|n| ctx.is_state(unit, n) || derived.contains(n)))
    };
    let growing_op = |e: &Expr| -> Option<&'static str> {
        let mut op = None;
        e.walk(&mut |x| {
            if let (None, ExprKind::Binary { op: o @ (BinOp::Add | BinOp::Mul), .. }) = (op, &x.kind) {
                op = Some(o.symbol());
            }
        });
        op
    };
    let tracked = |name: &str| ctx.is_state(unit, name) || amount_locals.contains(name);
    let guarded = |facts: &[Fact], name: &str| facts.iter().any(|f| f.op.is_relational() && f.mentions(name));

    let mut found: Vec<ArithSite> = Vec::new();
    let mut facts = Vec::new();
    walk_guarded(unit.stmts, &mut facts, false, &mut |v, facts, _| match v {
        Visit::Decl { name, init, stmt } => {
            if amount_locals.contains(name) && !guarded(facts, name) {
                if let Some(op) = growing_op(init).filter(|_| tainted(init)) {
                    found.push(ArithSite { function: unit.name.clone(), span: stmt.span, op: op.into() });
                }
            }
        }
        Visit::Expr(e, _) => e.walk(&mut |x| {
            if let ExprKind::Assign { op, target, value } = &x.kind {
                let Some(root) = target.root_ident() else { return };
                if !tracked(root) || guarded(facts, root) {
                    return;
                }
                let op = match op {
                    AssignOp::Add | AssignOp::Mul => Some(op.symbol()),
                    _ => growing_op(value).filter(|_| tainted(value)),
                };
                if let Some(op) = op {
                    found.push(ArithSite { function: unit.name.clone(), span: x.span, op: op.into() });
                }
            } else if let Some((_, _, arg)) = send_call(x) {
                let name_guarded = arg.any(|a| a.as_ident().is_some_and(|n| guarded(facts, n)));
                if let Some(op) = growing_op(arg).filter(|_| tainted(arg) && !name_guarded) {
                    if sends.iter().any(|s| s.span == x.span) {
                        found.push(ArithSite { function: unit.name.clone(), span: arg.span, op: op.into() });
                    }
                }
            }
        }),
    });
    fp.unguarded_arith_sites.extend(found);
}

fn index_sites(ctx: &Ctx, unit: &Unit, fp: &mut ContractFingerprint) {
    let is_dynamic = |name: &str| ctx.state_ty(unit, name).is_some_and(TypeName::is_dynamic_array);
    let bounded = |facts: &[Fact], array: &str, idx: &Expr| {
        let idx = idx.to_string();
        facts.iter().any(|f| {
            let is_len = |e: &Expr| matches!(&e.unparen().kind, ExprKind::Member { base, member } if member == "length" && base.as_ident() == Some(array));
            match f.op {
                BinOp::Lt => f.lhs.unparen().to_string() == idx && is_len(f.rhs),
                BinOp::Gt => f.rhs.unparen().to_string() == idx && is_len(f.lhs),
                _ => false,
            }
        })
    };
    let mut found = Vec::new();
    let mut facts = Vec::new();
    walk_guarded(unit.stmts, &mut facts, false, &mut |v, facts, _| {
        let Visit::Expr(e, _) = v else { return };
        let mut local = facts.to_vec();
        walk_expr_guarded(e, &mut local, &mut |x, facts| {
            if let ExprKind::Index { base, index: Some(idx) } = &x.kind {
                if let Some(array) = base.as_ident().filter(|n| is_dynamic(n)) {
                    if !bounded(facts, array, idx) {
                        found.push(IndexSite { function: unit.name.clone(), span: x.span, array: array.to_string() });
                    }
                }
            }
        });
    });
    found.dedup_by_key(|s| s.span);
    fp.dynamic_index_sites.extend(found);
}

/// Renders an exact ratio as `n/d` (or `n` when integral).
pub fn ratio_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Lossy decimal view for display only.
pub fn ratio_f64(r: &BigRational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    macro_rules! fixture {
        ($name:literal) => {
            include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus/", $name))
        };
    }

    fn fp_of(src: &str) -> ContractFingerprint {
        let unit = parse(src).unwrap();
        extract_fingerprint(unit.contracts.last().unwrap())
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn wei(v: u128) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn etheramid_is_a_parent_walk() {
        let fp = fp_of(fixture!("etheramid.sol"));
        assert!(fp.has_parent_link_mapping);
        assert!(fp.payout_parent_walk);
        assert!(!fp.payout_fifo_multiplier.0);
        assert!(!fp.has_investor_array);
        assert_eq!(fp.min_deposit_guard, (true, Some(wei(10u128.pow(18)))));
        assert_eq!(fp.payout_shapes(), 1);
    }

    #[test]
    fn crystal_doubler_pays_fifo_double() {
        let fp = fp_of(fixture!("crystal_doubler.sol"));
        assert!(fp.has_investor_array);
        assert_eq!(fp.payout_fifo_multiplier, (true, Some(ratio(2, 1))));
        assert_eq!(fp.min_deposit_guard, (true, Some(wei(500 * 10u128.pow(15)))));
        assert_eq!(fp.payout_shapes(), 1);
    }

    #[test]
    fn ponzico_is_pro_rata_with_half_fee() {
        let fp = fp_of(fixture!("ponzico.sol"));
        assert!(fp.has_investor_array);
        assert!(fp.payout_pro_rata);
        assert_eq!(fp.owner_fee, (true, Some(ratio(1, 2))));
        assert!(!fp.min_deposit_guard.0);
        assert_eq!(fp.payout_shapes(), 1);
    }

    #[test]
    fn ponzi_scheme_forwards_to_last_depositor() {
        let fp = fp_of(fixture!("ponzi_scheme.sol"));
        assert!(fp.has_single_last_depositor);
        assert!(fp.payout_single_forward);
        assert!(fp.entry_fee_doubling);
        assert_eq!(fp.payout_shapes(), 1);
        assert_eq!(fp.send_sites.len(), 1);
        assert_eq!(fp.send_sites[0].receiver, "lastDepositor");
        assert!(!fp.send_sites[0].checked);
    }

    #[test]
    fn variants_are_recognised() {
        let thirds = fp_of(fixture!("pyramid_thirds.sol"));
        assert!(thirds.payout_parent_walk && thirds.has_parent_link_mapping);
        assert_eq!(thirds.min_deposit_guard, (true, Some(wei(50 * 10u128.pow(15)))));

        let steady = fp_of(fixture!("steady_doubler.sol"));
        assert_eq!(steady.payout_fifo_multiplier, (true, Some(ratio(3, 2))));
        assert_eq!(steady.owner_fee, (true, Some(ratio(1, 20))));
        assert_eq!(steady.min_deposit_guard, (true, Some(wei(100 * 10u128.pow(15)))));
        assert!(steady.dynamic_index_sites.is_empty(), "{:?}", steady.dynamic_index_sites);
    }

    #[test]
    fn empty_contract_has_no_features() {
        let fp = fp_of("contract A { }");
        assert_eq!(fp, ContractFingerprint { contract: "A".into(), ..Default::default() });
    }

    #[test]
    fn benign_token_has_no_payout_shape() {
        let fp = fp_of(fixture!("simple_token.sol"));
        assert_eq!(fp.payout_shapes(), 0);
        assert_eq!(fp.storage_features(), 0);
        assert!(fp.send_sites.is_empty());
    }

    #[test]
    fn send_checking() {
        let src = "contract A { address a; function f(uint v) {
            msg.sender.send(v);
            if (!a.send(v)) throw;
            require(a.send(v));
            bool ok = a.send(v);
            if (!ok) throw;
            bool lost = a.send(v);
            a.transfer(v);
        } }";
        let unit = parse(src).unwrap();
        let sites = checked_send_analysis(&unit.contracts[0].functions[0]);
        let checked: Vec<bool> = sites.iter().map(|s| s.checked).collect();
        assert_eq!(checked, [false, true, true, true, false, true]);
        assert_eq!(sites[0].receiver, "msg.sender");
    }

    #[test]
    fn send_sites_match_text_occurrences() {
        for src in [
            fixture!("etheramid.sol"),
            fixture!("crystal_doubler.sol"),
            fixture!("ponzico.sol"),
            fixture!("ponzi_scheme.sol"),
            fixture!("pyramid_thirds.sol"),
            fixture!("steady_doubler.sol"),
            fixture!("simple_token.sol"),
        ] {
            let unit = parse(src).unwrap();
            let sites: usize = unit.contracts.iter().map(|c| extract_fingerprint(c).send_sites.len()).sum();
            let text = src.matches(".send(").count() + src.matches(".transfer(").count();
            assert_eq!(sites, text);
        }
    }

    #[test]
    fn halving_accepts_any_divisor_of_at_least_two() {
        let template = |k: u32| {
            format!(
                "contract T {{ struct N {{ address up; uint got; }} mapping(address => N) t; address root;
                function join(address p) payable {{
                    address c = p; uint r = msg.value;
                    while (c != root) {{ uint s = r / {k}; c.send(s); r -= s; c = t[c].up; }}
                    c.send(r);
                }} }}"
            )
        };
        assert!(fp_of(&template(2)).payout_parent_walk);
        assert!(fp_of(&template(4)).payout_parent_walk);
        assert!(!fp_of(&template(1)).payout_parent_walk);
    }

    #[test]
    fn guard_shapes() {
        let src = "contract A { uint[] a; uint total; function f(uint i) {
            require(i < a.length); a[i] = 1;
            if (i < a.length && a[i] > 0) { a[i] = 2; }
            a[i + 1] = 3;
            assert(i > 0);
            if (total > 10) { total += 1; }
            total += 2;
        } }";
        let fp = fp_of(src);
        let idx: Vec<_> = fp.dynamic_index_sites.iter().map(|s| s.span.line).collect();
        assert_eq!(idx, [4]);
        let arith: Vec<_> = fp.unguarded_arith_sites.iter().map(|s| s.span.line).collect();
        assert_eq!(arith, [7]);
    }
}
