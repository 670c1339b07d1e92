use mahler::bounds::{exponents, trdeg_bounds, Params, Theorem};
use mahler::evaluator::{eval_diagonal, eval_general, make_point, PointStyle};
use mahler::independence::certify;
use mahler::orbit::{check_hypotheses, compute_orbit};
use mahler::probe::{find_relation, measure_consistency, RelationQuery};
use mahler::system::{explicit_diagonal_series, residual, solve_series, DiagonalSystem, MahlerSystem};
use mahler::{Ball, Dyadic, Polynomial, PowerSeries, Rational, RationalFunction};
use num_bigint::BigInt;

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn poly(c: &[i64]) -> Polynomial {
    Polynomial::from_ints(c)
}

fn square() -> RationalFunction {
    RationalFunction::from_polynomial(poly(&[0, 0, 1]))
}

fn tol(bits: i64) -> Rational {
    Dyadic::pow2(-bits).to_rational()
}

#[test]
fn worked_example_end_to_end() {
    let ds = DiagonalSystem::new(square(), vec![poly(&[0, 1])]).unwrap();
    let ms = ds.to_mahler_system();
    let sol = solve_series(&ms, 64).unwrap();
    assert!(residual(&ms, &sol, 64).unwrap().iter().all(PowerSeries::is_zero));
    assert_eq!(sol, explicit_diagonal_series(&ds, 64));

    let y = rat(1, 2);
    let orbit = compute_orbit(ds.p(), &y, 64, 256).unwrap();
    assert!(check_hypotheses(&ms, &orbit).unwrap().all_ok());
    let values = eval_diagonal(&ds, &orbit, &tol(200)).unwrap();
    assert!(values[0].mid_decimal(30).starts_with("0.81642150902189314370"));
    let point = make_point(&values, PointStyle::Theorem1, None, true).unwrap();
    assert_eq!(point.coords.len(), 2);

    assert!(certify(&ds).unwrap().conclusion);

    let params = Params::new(1, 2, 2).unwrap();
    assert_eq!(trdeg_bounds(&params, 64).cor1, 1);
    let report = exponents(Theorem::T1, &params, 0, &rat(1, 10), 64).unwrap();

    let q = RelationQuery { values: values.clone(), max_degree: 3, max_height: BigInt::from(1000), precision_bits: 128 };
    assert!(find_relation(&q).unwrap().found.is_none());
    let c = measure_consistency(&values, &report, 3, 20, 100, 7).unwrap();
    assert!(c.is_consistent());
}

#[test]
fn certified_general_route_matches_the_diagonal_one() {
    // f = f∘p + q is both a diagonal and a general system.
    let ds = DiagonalSystem::new(square(), vec![poly(&[0, 1, 1])]).unwrap();
    let orbit = compute_orbit(ds.p(), &rat(1, 3), 64, 256).unwrap();
    let diag = eval_diagonal(&ds, &orbit, &tol(150)).unwrap();
    let gen = eval_general(&ds.to_mahler_system(), &orbit, 100, &tol(150)).unwrap();
    assert!(diag[0].overlaps(&gen.values[0]));
}

#[test]
fn general_values_satisfy_the_functional_equation() {
    // f(z) = (z − 3) f(z²) + z
    let ms = MahlerSystem::new(square(), poly(&[1]), vec![vec![poly(&[-3, 1])]], vec![poly(&[0, 1])]).unwrap();
    let eval_at = |y: Rational| {
        let orbit = compute_orbit(ms.p(), &y, 64, 256).unwrap();
        eval_general(&ms, &orbit, 100, &tol(100)).unwrap().values.remove(0)
    };
    let fy = eval_at(rat(1, 2));
    let fy2 = eval_at(rat(1, 4));
    let y = Ball::from_rational(&rat(1, 2), 256);
    let rhs = &(&(&y - &Ball::from_i64(3, 256)) * &fy2) + &y;
    assert!(fy.overlaps(&rhs), "{} vs {}", fy.mid_decimal(30), rhs.mid_decimal(30));
}
