//! Writes SVG renderings of iterations, a refined graph, a main tree and an automaton.

use std::path::PathBuf;

use fractop::automaton::build_automaton;
use fractop::dendrite::{analyse_dendrite, CERT_DEPTH};
use fractop::gasket::{validate_gasket, vertex_iteration};
use fractop::graph::{refine, MapFamily, WeightAssignment};
use fractop::samples;
use fractop::svg;
use fractop::{compute_post_critical, Ifs, Result};

fn main() -> Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "figures".into()));
    std::fs::create_dir_all(&dir).map_err(|e| fractop::Error::Io(e.to_string()))?;
    let save = |name: &str, body: String| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| fractop::Error::Io(e.to_string()))?;
        println!("{}", p.display());
        Ok(())
    };

    let g = validate_gasket(&samples::sierpinski_spec())?;
    let ifs = Ifs::new(g.spec.clone())?;
    for m in 1..=2 {
        let it = vertex_iteration(&g, m)?;
        let comps = it.components.clone();
        save(&format!("sierpinski_f{m}.svg"), svg::iteration_svg(&ifs, &svg::TRIANGLE, &it.family.words, |k| comps.iter().position(|c| c.contains(&k))))?;
    }

    let pcd = compute_post_critical(&ifs)?;
    let family = MapFamily::singletons(3);
    let w = WeightAssignment::uniform(3, vec![0.5; 3]).typed::<f64>(3, 3)?;
    save("sierpinski_g3.svg", svg::graph_svg(&refine(&ifs, &pcd, &family, &w, 3)?))?;
    save("sierpinski_automaton.svg", svg::automaton_svg(&build_automaton(&ifs, &pcd)?))?;

    let d = analyse_dendrite(&samples::k_alpha_spec(0.25), CERT_DEPTH)?;
    save("k_quarter_main_tree.svg", svg::main_tree_svg(&d.ifs, &d.system)?)?;
    Ok(())
}
