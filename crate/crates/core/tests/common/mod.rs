#![allow(dead_code)]

use koebe_core::hypcore::{geodesic_exp, random_mobius, HPoint, LorentzMap, MinkowskiVec, TangentVec};
use koebe_core::koebe::{generate_canonical, perturb, KoebeCapSystem, Solid};
use nalgebra::Vector3;

/// Random Möbius image of a canonical solid.
pub fn perturbed(solid: Solid, seed: u64, rapidity: f64) -> KoebeCapSystem {
    perturb(&generate_canonical(solid), &random_mobius(seed, rapidity, 3)).unwrap()
}

/// Image of a canonical solid under the boost taking `o` a distance `s`
/// along `dir`.
pub fn boosted(solid: Solid, dir: [f64; 3], s: f64) -> (KoebeCapSystem, LorentzMap) {
    let o = HPoint::origin(3);
    let v = TangentVec::new(o.clone(), MinkowskiVec::new(&dir, 0.0));
    let t = LorentzMap::boost_from_origin(&geodesic_exp(&o, &v, s));
    (perturb(&generate_canonical(solid), &t).unwrap(), t)
}

pub fn spatial3(v: &MinkowskiVec) -> Vector3<f64> {
    let s = v.spatial();
    Vector3::new(s[0], s[1], s[2])
}
