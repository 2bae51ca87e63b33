//! Exact semantics for the ten quantifiers over 20-slot scenes, plus
//! brute-force checkers for conservativity, duality, and symmetry.
//!
//! A quantifier here is a relation between two sets A and B, decided purely
//! by the cardinalities of the Venn zones A\B, A∩B, and B\A. Scenes carry 20
//! entity slots, each placed in one of the four zones or left as padding;
//! evaluation goes through [`ZoneCounts`], which makes exhaustive property
//! checking tractable (10,626 count tuples instead of 5^20 scenes).

use std::fmt;

/// Number of entity slots in a scene, padding included.
pub const SCENE_SIZE: usize = 20;

/// Region of the two-set Venn diagram an entity occupies.
///
/// `Null` marks a padding slot; no quantifier can see it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Zone {
    AOnly,
    AAndB,
    BOnly,
    Outside,
    Null,
}

impl Zone {
    /// All five variants in wire-code order.
    pub const ALL: [Zone; 5] = [Zone::AOnly, Zone::AAndB, Zone::BOnly, Zone::Outside, Zone::Null];

    /// Wire code used in dataset files: A\B=0, A∩B=1, B\A=2, outside=3, null=4.
    pub fn code(self) -> u8 {
        match self {
            Zone::AOnly => 0,
            Zone::AAndB => 1,
            Zone::BOnly => 2,
            Zone::Outside => 3,
            Zone::Null => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Zone> {
        Zone::ALL.get(code as usize).copied()
    }
}

/// An ordered assignment of the 20 slots to zones.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scene {
    slots: [Zone; SCENE_SIZE],
}

impl Scene {
    pub fn new(slots: [Zone; SCENE_SIZE]) -> Scene {
        Scene { slots }
    }

    /// Builds a scene from a slice, rejecting any length other than 20.
    pub fn from_slice(slots: &[Zone]) -> Option<Scene> {
        let slots: [Zone; SCENE_SIZE] = slots.try_into().ok()?;
        Some(Scene { slots })
    }

    pub fn slots(&self) -> &[Zone; SCENE_SIZE] {
        &self.slots
    }
}

impl fmt::Debug for Scene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let codes: Vec<u8> = self.slots.iter().map(|z| z.code()).collect();
        write!(f, "Scene{codes:?}")
    }
}

/// Cardinalities of the five slot kinds of a scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ZoneCounts {
    /// |A\B|
    pub a_only: u8,
    /// |A∩B|
    pub ab: u8,
    /// |B\A|
    pub b_only: u8,
    /// entities outside A∪B
    pub outside: u8,
    /// padding slots
    pub null: u8,
}

impl ZoneCounts {
    pub fn new(a_only: u8, ab: u8, b_only: u8, outside: u8, null: u8) -> ZoneCounts {
        ZoneCounts { a_only, ab, b_only, outside, null }
    }

    pub fn total(&self) -> u32 {
        self.a_only as u32 + self.ab as u32 + self.b_only as u32 + self.outside as u32 + self.null as u32
    }
}

impl fmt::Display for ZoneCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{},{})", self.a_only, self.ab, self.b_only, self.outside, self.null)
    }
}

/// Tallies a scene's slots into zone cardinalities.
pub fn zone_counts(scene: &Scene) -> ZoneCounts {
    let mut counts = ZoneCounts::new(0, 0, 0, 0, 0);
    for zone in scene.slots() {
        match zone {
            Zone::AOnly => counts.a_only += 1,
            Zone::AAndB => counts.ab += 1,
            Zone::BOnly => counts.b_only += 1,
            Zone::Outside => counts.outside += 1,
            Zone::Null => counts.null += 1,
        }
    }
    counts
}

/// The ten quantifiers, in the fixed inventory row order used everywhere
/// (one-hot index, dataset files, record tables).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantifier {
    AllAb,
    NotAllAb,
    MostAb,
    MostANonb,
    ExactlyHalfAb,
    OnlyAb,
    NotOnlyAb,
    MostBa,
    MostBNona,
    ExactlyHalfBa,
}

impl Quantifier {
    pub const ALL: [Quantifier; 10] = [
        Quantifier::AllAb,
        Quantifier::NotAllAb,
        Quantifier::MostAb,
        Quantifier::MostANonb,
        Quantifier::ExactlyHalfAb,
        Quantifier::OnlyAb,
        Quantifier::NotOnlyAb,
        Quantifier::MostBa,
        Quantifier::MostBNona,
        Quantifier::ExactlyHalfBa,
    ];

    /// Row index in the fixed inventory order (also the one-hot position).
    pub fn index(self) -> usize {
        self as usize
    }

    /// Canonical lowercase name used in files and CLI arguments.
    pub fn name(self) -> &'static str {
        match self {
            Quantifier::AllAb => "all_ab",
            Quantifier::NotAllAb => "not_all_ab",
            Quantifier::MostAb => "most_ab",
            Quantifier::MostANonb => "most_a_nonb",
            Quantifier::ExactlyHalfAb => "exactly_half_ab",
            Quantifier::OnlyAb => "only_ab",
            Quantifier::NotOnlyAb => "not_only_ab",
            Quantifier::MostBa => "most_ba",
            Quantifier::MostBNona => "most_b_nona",
            Quantifier::ExactlyHalfBa => "exactly_half_ba",
        }
    }

    pub fn from_name(name: &str) -> Option<Quantifier> {
        Quantifier::ALL.into_iter().find(|q| q.name() == name)
    }

    /// Whether truth is insensitive to B\A (verified exhaustively by
    /// [`check_conservative`]; this flag is the declared classification).
    pub fn conservative(self) -> bool {
        matches!(
            self,
            Quantifier::AllAb
                | Quantifier::NotAllAb
                | Quantifier::MostAb
                | Quantifier::MostANonb
                | Quantifier::ExactlyHalfAb
        )
    }

    /// The argument-swapped twin Q' with Q(A)(B) = Q'(B)(A). Pairs one
    /// conservative quantifier with one non-conservative one.
    pub fn dual(self) -> Quantifier {
        match self {
            Quantifier::AllAb => Quantifier::OnlyAb,
            Quantifier::NotAllAb => Quantifier::NotOnlyAb,
            Quantifier::MostAb => Quantifier::MostBa,
            Quantifier::MostANonb => Quantifier::MostBNona,
            Quantifier::ExactlyHalfAb => Quantifier::ExactlyHalfBa,
            Quantifier::OnlyAb => Quantifier::AllAb,
            Quantifier::NotOnlyAb => Quantifier::NotAllAb,
            Quantifier::MostBa => Quantifier::MostAb,
            Quantifier::MostBNona => Quantifier::MostANonb,
            Quantifier::ExactlyHalfBa => Quantifier::ExactlyHalfAb,
        }
    }
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Applies a quantifier's cardinality relation to zone counts.
///
/// Truth depends only on `a_only`, `ab`, and `b_only`; outside and padding
/// slots are invisible.
pub fn evaluate(q: Quantifier, counts: ZoneCounts) -> bool {
    let a = counts.a_only;
    let ab = counts.ab;
    let b = counts.b_only;
    match q {
        Quantifier::AllAb => a == 0,
        Quantifier::NotAllAb => a != 0,
        Quantifier::MostAb => a < ab,
        Quantifier::MostANonb => a > ab,
        Quantifier::ExactlyHalfAb => a == ab,
        Quantifier::OnlyAb => b == 0,
        Quantifier::NotOnlyAb => b != 0,
        Quantifier::MostBa => b < ab,
        Quantifier::MostBNona => b > ab,
        Quantifier::ExactlyHalfBa => b == ab,
    }
}

/// Models the substitution B ↦ A∩B: entities in B\A leave B and land
/// outside A∪B. Slot total is preserved.
pub fn restrict_to_a(counts: ZoneCounts) -> ZoneCounts {
    ZoneCounts {
        a_only: counts.a_only,
        ab: counts.ab,
        b_only: 0,
        outside: counts.outside + counts.b_only,
        null: counts.null,
    }
}

/// Exchanges the roles of A and B: |A\B| and |B\A| swap, the intersection
/// and the rest stay put.
pub fn swap_arguments(counts: ZoneCounts) -> ZoneCounts {
    ZoneCounts {
        a_only: counts.b_only,
        ab: counts.ab,
        b_only: counts.a_only,
        outside: counts.outside,
        null: counts.null,
    }
}

/// Yields every 5-tuple of non-negative zone counts summing to `total`,
/// each exactly once. For `total = 20` that is C(24,4) = 10,626 tuples.
pub fn enumerate_counts(total: u8) -> impl Iterator<Item = ZoneCounts> {
    (0..=total).flat_map(move |a_only| {
        (0..=total - a_only).flat_map(move |ab| {
            (0..=total - a_only - ab).flat_map(move |b_only| {
                (0..=total - a_only - ab - b_only).map(move |outside| {
                    let null = total - a_only - ab - b_only - outside;
                    ZoneCounts::new(a_only, ab, b_only, outside, null)
                })
            })
        })
    })
}

/// Result of an exhaustive property check: either the property holds on the
/// whole enumerated space, or a counterexample is returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckOutcome {
    Holds,
    Witness(ZoneCounts),
}

impl CheckOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, CheckOutcome::Holds)
    }

    pub fn witness(&self) -> Option<ZoneCounts> {
        match self {
            CheckOutcome::Holds => None,
            CheckOutcome::Witness(w) => Some(*w),
        }
    }
}

fn check_property(total: u8, mut property: impl FnMut(ZoneCounts) -> bool) -> CheckOutcome {
    match enumerate_counts(total).find(|&c| !property(c)) {
        None => CheckOutcome::Holds,
        Some(w) => CheckOutcome::Witness(w),
    }
}

/// Conservativity under an arbitrary evaluation function (the injectable
/// variant exists so harnesses can test the checker against corrupted
/// relations).
pub fn check_conservative_with(
    eval: impl Fn(Quantifier, ZoneCounts) -> bool,
    q: Quantifier,
    total: u8,
) -> CheckOutcome {
    check_property(total, |c| eval(q, c) == eval(q, restrict_to_a(c)))
}

/// Exhaustively checks Q(A)(B) = Q(A)(A∩B) over all count tuples of the
/// given total.
pub fn check_conservative(q: Quantifier, total: u8) -> CheckOutcome {
    check_conservative_with(evaluate, q, total)
}

/// Duality under an arbitrary evaluation function.
pub fn check_duality_with(
    eval: impl Fn(Quantifier, ZoneCounts) -> bool,
    q: Quantifier,
    total: u8,
) -> CheckOutcome {
    check_property(total, |c| eval(q, c) == eval(q.dual(), swap_arguments(c)))
}

/// Exhaustively checks Q(A)(B) = Q'(B)(A) against the declared dual.
pub fn check_duality(q: Quantifier, total: u8) -> CheckOutcome {
    check_duality_with(evaluate, q, total)
}

/// Symmetry under an arbitrary evaluation function.
pub fn check_symmetric_with(
    eval: impl Fn(Quantifier, ZoneCounts) -> bool,
    q: Quantifier,
    total: u8,
) -> CheckOutcome {
    check_property(total, |c| eval(q, c) == eval(q, swap_arguments(c)))
}

/// Exhaustively checks Q(A)(B) = Q(B)(A). Every quantifier in the inventory
/// is expected to fail this with a witness.
pub fn check_symmetric(q: Quantifier, total: u8) -> CheckOutcome {
    check_symmetric_with(evaluate, q, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zone_counts_tallies_slots() {
        let all_null = Scene::new([Zone::Null; SCENE_SIZE]);
        assert_eq!(zone_counts(&all_null), ZoneCounts::new(0, 0, 0, 0, 20));

        let all_a = Scene::new([Zone::AOnly; SCENE_SIZE]);
        assert_eq!(zone_counts(&all_a), ZoneCounts::new(20, 0, 0, 0, 0));

        // 3 A\B, 5 A∩B, 2 B\A, 4 outside, 6 null, tallied by hand.
        let mut slots = Vec::new();
        slots.extend(std::iter::repeat_n(Zone::AOnly, 3));
        slots.extend(std::iter::repeat_n(Zone::AAndB, 5));
        slots.extend(std::iter::repeat_n(Zone::BOnly, 2));
        slots.extend(std::iter::repeat_n(Zone::Outside, 4));
        slots.extend(std::iter::repeat_n(Zone::Null, 6));
        let scene = Scene::from_slice(&slots).unwrap();
        assert_eq!(zone_counts(&scene), ZoneCounts::new(3, 5, 2, 4, 6));
    }

    #[test]
    fn scene_from_slice_rejects_wrong_length() {
        assert!(Scene::from_slice(&[Zone::Null; 19]).is_none());
        assert!(Scene::from_slice(&[Zone::Null; 21]).is_none());
    }

    #[test]
    fn evaluate_matches_cardinality_relations() {
        assert!(evaluate(Quantifier::AllAb, ZoneCounts::new(0, 7, 0, 0, 13)));
        assert!(evaluate(Quantifier::MostAb, ZoneCounts::new(2, 3, 0, 0, 15)));
        assert!(evaluate(Quantifier::ExactlyHalfBa, ZoneCounts::new(0, 0, 0, 0, 20)));
        assert!(!evaluate(Quantifier::OnlyAb, ZoneCounts::new(0, 0, 1, 0, 19)));
    }

    #[test]
    fn evaluate_ignores_outside_and_null() {
        for q in Quantifier::ALL {
            for a in 0..=4u8 {
                for ab in 0..=4u8 {
                    for b in 0..=4u8 {
                        let base = evaluate(q, ZoneCounts::new(a, ab, b, 0, 0));
                        for outside in 0..=4u8 {
                            let c = ZoneCounts::new(a, ab, b, outside, 4 - outside);
                            assert_eq!(evaluate(q, c), base, "{q} at {c}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn restrict_moves_b_only_outside() {
        assert_eq!(
            restrict_to_a(ZoneCounts::new(3, 5, 2, 4, 6)),
            ZoneCounts::new(3, 5, 0, 6, 6)
        );
        let empty = ZoneCounts::new(0, 0, 0, 0, 20);
        assert_eq!(restrict_to_a(empty), empty);
        let no_b = ZoneCounts::new(4, 3, 0, 2, 11);
        assert_eq!(restrict_to_a(no_b), no_b);
    }

    #[test]
    fn swap_exchanges_a_only_and_b_only() {
        assert_eq!(
            swap_arguments(ZoneCounts::new(3, 5, 2, 4, 6)),
            ZoneCounts::new(2, 5, 3, 4, 6)
        );
        let symmetric = ZoneCounts::new(4, 1, 4, 5, 6);
        assert_eq!(swap_arguments(symmetric), symmetric);
        // Swapping arguments turns most_ab questions into most_ba questions.
        let c = ZoneCounts::new(2, 3, 9, 0, 6);
        assert_eq!(
            evaluate(Quantifier::MostAb, c),
            evaluate(Quantifier::MostBa, swap_arguments(c))
        );
    }

    fn binomial(n: u64, k: u64) -> u64 {
        // Independent count of weak compositions for the enumeration test.
        (1..=k).fold(1u64, |acc, i| acc * (n - k + i) / i)
    }

    #[test]
    fn enumerate_counts_is_exhaustive_and_unique() {
        assert_eq!(enumerate_counts(0).count(), 1);
        assert_eq!(enumerate_counts(0).next(), Some(ZoneCounts::new(0, 0, 0, 0, 0)));
        assert_eq!(enumerate_counts(1).count(), 5);

        let all: Vec<ZoneCounts> = enumerate_counts(20).collect();
        assert_eq!(all.len(), 10_626);
        assert_eq!(all.len() as u64, binomial(24, 4));
        let unique: std::collections::HashSet<_> = all.iter().copied().collect();
        assert_eq!(unique.len(), all.len());
        assert!(all.iter().all(|c| c.total() == 20));
    }

    #[test]
    fn conservativity_matches_declared_classification() {
        for q in Quantifier::ALL {
            let outcome = check_conservative(q, 20);
            assert_eq!(outcome.holds(), q.conservative(), "{q}: {outcome:?}");
            if let Some(w) = outcome.witness() {
                assert_ne!(evaluate(q, w), evaluate(q, restrict_to_a(w)));
            }
        }
    }

    #[test]
    fn known_conservativity_witnesses_check_out() {
        // only_ab flips from false to true when B\A is emptied out.
        let w = ZoneCounts::new(0, 0, 1, 0, 19);
        assert!(!evaluate(Quantifier::OnlyAb, w));
        assert!(evaluate(Quantifier::OnlyAb, restrict_to_a(w)));

        // most_b_nona: 2 > 1 before restriction, 0 > 1 after.
        let w = ZoneCounts::new(0, 1, 2, 0, 17);
        assert!(evaluate(Quantifier::MostBNona, w));
        assert!(!evaluate(Quantifier::MostBNona, restrict_to_a(w)));
    }

    #[test]
    fn duality_holds_for_all_quantifiers() {
        for q in Quantifier::ALL {
            assert!(check_duality(q, 20).holds(), "{q}");
            assert!(check_duality(q, 0).holds(), "{q} at total 0");
        }
    }

    #[test]
    fn dual_map_is_an_involution_crossing_the_boundary() {
        for q in Quantifier::ALL {
            assert_eq!(q.dual().dual(), q);
            assert_ne!(q.dual().conservative(), q.conservative());
        }
    }

    #[test]
    fn no_quantifier_is_symmetric() {
        for q in Quantifier::ALL {
            let outcome = check_symmetric(q, 20);
            let w = outcome.witness().unwrap_or_else(|| panic!("{q} came out symmetric"));
            assert_ne!(evaluate(q, w), evaluate(q, swap_arguments(w)));
        }
    }

    #[test]
    fn known_symmetry_witnesses_check_out() {
        let w = ZoneCounts::new(0, 0, 1, 0, 19);
        assert!(evaluate(Quantifier::AllAb, w));
        assert!(!evaluate(Quantifier::AllAb, swap_arguments(w)));

        let w = ZoneCounts::new(1, 0, 0, 0, 1);
        assert!(!evaluate(Quantifier::ExactlyHalfAb, w));
        assert!(evaluate(Quantifier::ExactlyHalfAb, swap_arguments(w)));
    }

    #[test]
    fn injectable_checker_detects_corrupted_relations() {
        let corrupted = |q: Quantifier, c: ZoneCounts| {
            if q == Quantifier::AllAb {
                !evaluate(q, c)
            } else {
                evaluate(q, c)
            }
        };
        // Negating all_ab yields not_all_ab, which is still conservative,
        // but it breaks the declared duality with only_ab.
        assert!(!check_duality_with(corrupted, Quantifier::AllAb, 20).holds());

        // A relation that peeks at b_only loses conservativity.
        let peeking = |q: Quantifier, c: ZoneCounts| {
            if q == Quantifier::MostAb {
                evaluate(q, c) && c.b_only == 0
            } else {
                evaluate(q, c)
            }
        };
        assert!(!check_conservative_with(peeking, Quantifier::MostAb, 20).holds());
    }

    #[test]
    fn names_round_trip() {
        for q in Quantifier::ALL {
            assert_eq!(Quantifier::from_name(q.name()), Some(q));
        }
        assert_eq!(Quantifier::from_name("every_ab"), None);
        let conservative = Quantifier::ALL.iter().filter(|q| q.conservative()).count();
        assert_eq!(conservative, 5);
    }
}
