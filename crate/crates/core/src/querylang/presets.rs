//! The sample recommendation query and its two refinements.

use super::ast::*;
use super::parse;
use crate::graphstore::{EdgeKind, VertexKind};

pub const SAMPLE_STEAMID: &str = "76561197960653976";

pub const LISTING_1: &str = "SELECT V_G(b).name, V_G(b).cost
PATTERNS V_P(a)-E_F-V_P-E_O-V_G(b)
V_P(a)-E_O-V_G-E_D-V_D-E_D-V_G(b)
WHERE V_P(a).steamid=76561197960653976
ORDERBY AVG(V_P(a)-E_F-V_P-E_O.attainmentRating-V_G(b))
LIMIT 5";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement<'a> {
    ExcludeOwned,
    Genre(&'a str),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("refinement needs a player variable `a` and a game variable `b` in PATTERNS")]
pub struct RefinementError;

fn owns_pattern() -> Pattern {
    Pattern::single(VertexAtom::named(VertexKind::Player, "a")).then(
        EdgeAtom::plain(EdgeKind::Owns),
        VertexAtom::named(VertexKind::Game, "b"),
    )
}

fn genre_pattern() -> Pattern {
    Pattern::single(VertexAtom::named(VertexKind::Game, "b")).then(
        EdgeAtom::plain(EdgeKind::HasGenre),
        VertexAtom::anon(VertexKind::Genre),
    )
}

fn binds(ast: &QueryAst, name: &str, kind: VertexKind) -> bool {
    ast.patterns
        .iter()
        .flat_map(|p| &p.vertices)
        .any(|v| v.kind == kind && v.var.as_deref() == Some(name))
}

/// Applies a refinement in place. Reapplying the same refinement is a no-op;
/// a second genre replaces the first.
pub fn refine(ast: &mut QueryAst, refinement: Refinement<'_>) -> Result<(), RefinementError> {
    if !binds(ast, "a", VertexKind::Player) || !binds(ast, "b", VertexKind::Game) {
        return Err(RefinementError);
    }
    match refinement {
        Refinement::ExcludeOwned => {
            let p = owns_pattern();
            if !ast.antipatterns.contains(&p) {
                ast.antipatterns.push(p);
            }
        }
        Refinement::Genre(name) => {
            let p = genre_pattern();
            if !ast.patterns.contains(&p) {
                ast.patterns.push(p);
            }
            let target = Projection {
                var: VarRef::Kind(VertexKind::Genre),
                attr: "description".into(),
            };
            let cond = Condition {
                target: target.clone(),
                op: CmpOp::Eq,
                value: Literal::Str(name.to_owned()),
            };
            match ast
                .conditions
                .iter_mut()
                .find(|c| c.target == target && c.op == CmpOp::Eq)
            {
                Some(existing) => *existing = cond,
                None => ast.conditions.push(cond),
            }
        }
    }
    Ok(())
}

/// The sample query for an arbitrary player, with optional refinements.
pub fn recommendation_query(
    steamid: &str,
    exclude_owned: bool,
    genre: Option<&str>,
    limit: u64,
) -> QueryAst {
    let mut ast = parse(LISTING_1).expect("sample query parses");
    ast.conditions[0].value = Literal::Str(steamid.to_owned());
    ast.limit = Some(limit.max(1));
    if exclude_owned {
        refine(&mut ast, Refinement::ExcludeOwned).expect("sample binds a and b");
    }
    if let Some(g) = genre {
        refine(&mut ast, Refinement::Genre(g)).expect("sample binds a and b");
    }
    ast
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::querylang::{unparse, validate};

    #[test]
    fn refinement_chain_round_trips() {
        let mut ast = parse(LISTING_1).unwrap();
        refine(&mut ast, Refinement::ExcludeOwned).unwrap();
        let new_game = unparse(&ast);
        assert!(new_game.contains("ANTIPATTERNS V_P(a)-E_O-V_G(b) WHERE"));
        refine(&mut ast, Refinement::Genre("Strategy")).unwrap();
        let text = unparse(&ast);
        assert!(text.contains("V_G(b)-E_R-V_R"));
        assert!(text.contains("V_R.description=\"Strategy\""));
        let back = parse(&text).unwrap();
        assert_eq!(back, ast);
        validate(&back).unwrap();
    }

    #[test]
    fn refinements_are_idempotent() {
        let mut once = parse(LISTING_1).unwrap();
        refine(&mut once, Refinement::ExcludeOwned).unwrap();
        refine(&mut once, Refinement::Genre("Strategy")).unwrap();
        let mut twice = once.clone();
        refine(&mut twice, Refinement::ExcludeOwned).unwrap();
        refine(&mut twice, Refinement::Genre("Strategy")).unwrap();
        assert_eq!(unparse(&once), unparse(&twice));
    }

    #[test]
    fn refinement_needs_a_and_b() {
        let mut ast = parse("SELECT g.name PATTERNS V_G(g)").unwrap();
        assert_eq!(refine(&mut ast, Refinement::ExcludeOwned), Err(RefinementError));
    }

    #[test]
    fn template_matches_listing() {
        let ast = recommendation_query(SAMPLE_STEAMID, false, None, 5);
        let listing = parse(LISTING_1).unwrap();
        assert_eq!(ast.patterns, listing.patterns);
        assert_eq!(ast.order_by, listing.order_by);
        assert_eq!(ast.conditions[0].value, Literal::Str(SAMPLE_STEAMID.into()));
    }
}
