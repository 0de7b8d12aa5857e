//! The temperature-dependent mosquito trait curves behind the model.

use wnvcast::model::MosquitoTraits;

fn main() {
    let traits = MosquitoTraits::default();
    let curves = [
        ("egg laying", &traits.egg_laying),
        ("aquatic development", &traits.aquatic_development),
        ("aquatic survival", &traits.aquatic_survival),
        ("adult lifespan", &traits.adult_lifespan),
        ("biting rate", &traits.biting_rate),
        ("vector competence", &traits.vector_competence),
        ("extrinsic incubation", &traits.extrinsic_incubation),
    ];
    print!("{:<22}", "trait \\ °C");
    let temps = [10.0, 15.0, 20.0, 25.0, 30.0, 35.0];
    for t in temps {
        print!("{t:>9.0}");
    }
    println!();
    for (name, curve) in curves {
        print!("{name:<22}");
        for t in temps {
            print!("{:>9.4}", curve.eval(t));
        }
        println!();
    }
}
