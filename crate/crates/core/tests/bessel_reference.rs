use bessel_calculus::bessel::bessel_j;

// (ν, z, J_ν(z)) at 40 significant digits, rounded to 20
#[allow(clippy::excessive_precision)]
const TABLE: [(f64, f64, f64); 50] = [
    (-0.25, 14.0, 0.10897780412579270976),
    (-0.25, 22.0, -0.15744297948537592511),
    (-0.25, 37.0, 0.060157051922674515007),
    (-0.25, 61.5, -0.015734972593568131707),
    (-0.25, 1000.5, 0.011872725323935584193),
    (0.0, 0.001, 0.999999750000015625),
    (0.0, 0.7, 0.88120088860740529545),
    (0.0, 37.0, 0.010862369724899694741),
    (0.0, 61.5, -0.053047358803436275482),
    (0.0, 140.0, 0.037358225012042690662),
    (0.3, 0.001, 0.11393853750601629263),
    (0.3, 0.7, 0.73859182062021894404),
    (0.3, 3.0, -0.06725499248207310099),
    (0.3, 9.5, -0.096219410133785799922),
    (0.3, 140.0, 0.058762557611726940805),
    (1.0, 0.7, 0.32899574154005892959),
    (1.0, 9.5, 0.16126443075752985095),
    (1.0, 14.0, 0.13337515469879325311),
    (1.0, 37.0, -0.13058003873375645503),
    (1.0, 61.5, -0.087251034190432773497),
    (1.5, 0.001, 8.410440899023056454e-6),
    (1.5, 0.7, 0.14826350832010160956),
    (1.5, 3.0, 0.47771821508709177155),
    (1.5, 9.5, 0.2560880844768258765),
    (1.5, 37.0, -0.10268189755989070061),
    (2.5, 0.7, 0.021053968866313296697),
    (2.5, 3.0, 0.41271003220971599344),
    (2.5, 14.0, -0.21425563673110612667),
    (2.5, 37.0, 0.076088247513821469199),
    (2.5, 61.5, 0.097598835820777923303),
    (4.0, 0.001, 2.6041665364583362628e-15),
    (4.0, 0.7, 0.00061009700795835089839),
    (4.0, 3.0, 0.13203418392461221033),
    (4.0, 61.5, -0.041379027237615199478),
    (4.0, 1000.5, 0.019357935901031312064),
    (7.0, 0.001, 1.5500991579086070495e-27),
    (7.0, 0.7, 1.2571583113555607449e-7),
    (7.0, 9.5, 0.28677693778518260056),
    (7.0, 37.0, 0.097138376068529145842),
    (7.0, 140.0, -0.061825732623395823822),
    (11.5, 9.5, 0.062826156163569825062),
    (11.5, 14.0, 0.27318645879551750411),
    (11.5, 22.0, 0.18374841997318172141),
    (11.5, 140.0, -0.041988879108726924831),
    (11.5, 1000.5, 0.0007892501204442789037),
    (20.0, 3.0, 1.2275946737992986496e-15),
    (20.0, 9.5, 4.6662644155212514437e-6),
    (20.0, 61.5, 0.041604748356108816324),
    (20.0, 140.0, -0.050645323115888727407),
    (20.0, 1000.5, 0.015919264154598917765),
];

#[test]
fn matches_high_precision_values() {
    for (nu, z, want) in TABLE {
        let got = bessel_j(nu, z).unwrap();
        // errors near zeros are measured against the envelope √(2/πz)
        let scale = want.abs().max((2.0 / (std::f64::consts::PI * z)).sqrt().min(1.0));
        assert!((got - want).abs() <= 1e-12 * scale, "J_{nu}({z}) = {got}, want {want}");
    }
}
