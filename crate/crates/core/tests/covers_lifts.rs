//! Mod-p covers: fiber sizes, deck groups, two-stage composition, and the
//! interaction between lifts and projections.

use covertrace::graphs::{compose_covers, homology_basis, lift_map, mod_p_cover, rose, rose_map};
use covertrace::words::FreeAut;

#[test]
fn mod_p_covers_are_regular_with_abelian_deck_groups() {
    for n in [2usize, 3] {
        for p in [2u64, 3] {
            let base = rose(n);
            let basis = homology_basis(&base).unwrap();
            let cover = mod_p_cover(&base, &basis, p).unwrap();
            let sheets = (p as usize).pow(n as u32);
            assert_eq!(cover.sheets(), sheets);
            assert!(cover.is_regular());
            assert_eq!(cover.deck().len(), sheets);

            let deck = cover.deck();
            for d in deck {
                for v in 0..cover.total().num_vertices() {
                    assert_eq!(cover.vertex_proj(d.vertices[v]), cover.vertex_proj(v));
                }
                for e in 0..cover.total().num_edges() {
                    assert_eq!(cover.edge_proj(d.edges[e]), cover.edge_proj(e));
                }
            }
            for da in deck.iter().take(6) {
                for db in deck.iter().take(6) {
                    for v in 0..cover.total().num_vertices() {
                        assert_eq!(da.vertices[db.vertices[v]], db.vertices[da.vertices[v]]);
                    }
                }
            }
        }
    }
}

#[test]
fn composed_mod_two_tower_still_covers_the_rose() {
    let base = rose(2);
    let basis0 = homology_basis(&base).unwrap();
    let stage1 = mod_p_cover(&base, &basis0, 2).unwrap();
    let basis1 = homology_basis(stage1.total()).unwrap();
    assert_eq!(basis1.rank(), 1 + 4 * (2 - 1));

    let stage2 = mod_p_cover(stage1.total(), &basis1, 2).unwrap();
    let composed = compose_covers(&stage1, &stage2).unwrap();
    assert_eq!(composed.sheets(), stage1.sheets() * stage2.sheets());
    assert!(composed.is_regular());
    for v in 0..composed.total().num_vertices() {
        assert_eq!(
            composed.vertex_proj(v),
            stage1.vertex_proj(stage2.vertex_proj(v))
        );
    }
}

#[test]
fn lifts_fix_the_chosen_basepoint_and_project_back() {
    let samples = [
        "rank: 2\na -> ab\nb -> a\n",
        "rank: 2\na -> a\nb -> Aba\n",
        "rank: 3\na -> a\nb -> Aba\nc -> c\n",
    ];
    for text in samples {
        let f = FreeAut::parse_text(text).unwrap();
        let base = rose(f.rank());
        let basis = homology_basis(&base).unwrap();
        let map = rose_map(&f);
        for p in [2u64, 3] {
            let cover = mod_p_cover(&base, &basis, p).unwrap();
            let lifted = lift_map(&cover, &basis, &map).unwrap();
            let total = cover.total();
            assert_eq!(lifted.vertex_image(total.basepoint()), total.basepoint());
            for e in 0..total.num_edges() {
                assert_eq!(
                    cover.project_path(lifted.edge_image(e)),
                    *map.edge_image(cover.edge_proj(e)),
                    "edge {e} of {text:?} mod {p}"
                );
            }
        }
    }
}
