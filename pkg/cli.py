"""
Interface en ligne de commande du laboratoire.

Usage:
  python cli.py sync --n 3 --k 1 --v "1"
  python cli.py domain --n 3 --alpha 0.14 --verify
  python cli.py domain --n 3 --alpha zeta:1,1 --format json-record
  python cli.py entropy --n 4 --alpha 0.3 --precision 128
  python cli.py scan --n 3 --alphas 0.05:0.95:50 --out scan.csv
  python cli.py conjecture --n 3 --alpha 0.75
  python cli.py atlas --n 3 --levels 1,2,-1 --max-letters 3
  python cli.py expansive --n 3 --alpha 0.14
"""
import argparse
import logging
import sys

import pandas as pd

from config import LAB_LOG_LEVEL, LAB_PRECISION, LAB_TIE_TOL, get_run_config, precision_context
from core_algebra import group_params
from errors import ConfigError, LabError, UnresolvedParameterError
from expansive_power import abramov_check, expansivity_power, induced_domain
from interval_dynamics import interval_spec
from measure_entropy import parse_alphas, rohlin_integral, scan, verify_conjecture, vol_n
from natext_domain import build_domain, dumps
from planar_map import block_images, partition_blocks, verify_bijectivity
from sync_solver import atlas, candidate_words, covered_fraction, solve_interval
from visualisation import creer_figure_domaine, creer_figure_scan, exporter_svg
from word_machinery import parse_word

logger = logging.getLogger(__name__)


# ========================================
# SORTIES
# ========================================

def _emit_table(df, cfg, label):
    df = df.copy()
    df['seed'] = cfg.seed
    if cfg.out:
        df.to_csv(cfg.out, index=False)
        print(f"✅ {label} : {len(df)} lignes écrites dans {cfg.out}")
    else:
        sys.stdout.write(df.to_csv(index=False))


def _banner(title):
    print("=" * 70)
    print(title)
    print("=" * 70)


def _config(args, **extra):
    return get_run_config(
        n=args.n,
        precision=args.precision,
        seed=args.seed,
        samples=args.samples,
        grid=args.grid,
        kmax=args.kmax,
        workers=args.workers,
        out=args.out,
        fmt=args.format,
        **extra,
    )


# ========================================
# SOUS-COMMANDES
# ========================================

def cmd_sync(args):
    cfg = _config(args, k=args.k, v=args.v)
    params = group_params(cfg.n, cfg.precision)
    interval = solve_interval(params, cfg.k, parse_word(cfg.v), tol=cfg.sync_tol, tie_tol=cfg.tie_tol)
    if not interval.valid:
        print(f"⚠️  J_{{{cfg.k},{cfg.v}}} : certificat de synchronisation en échec", file=sys.stderr)
    _emit_table(pd.DataFrame([interval.as_row()]), cfg, "Intervalle")
    return 0


def cmd_domain(args):
    cfg = _config(args, alpha=args.alpha)
    if cfg.fmt == 'svg' and not cfg.out:
        raise ConfigError("--format svg demande --out")
    params = group_params(cfg.n, cfg.precision)
    domain = build_domain(params, cfg.alpha, **_domain_options(cfg, args))
    print(f"✅ Ω construit : {domain.kind}, {len(domain.upper)} + {len(domain.lower)} rectangles", file=sys.stderr)
    if domain.approximate:
        print(f"⚠️  Domaine approché (résidu de masse {domain.residual:.3g})", file=sys.stderr)

    report = None
    if args.verify:
        spec = _spec_of(domain, cfg.tie_tol)
        blocks = partition_blocks(domain, spec, kmax=cfg.kmax)
        report = verify_bijectivity(domain, blocks, samples=cfg.samples, grid=cfg.grid, seed=cfg.seed, spec=spec)
        marker = '✅' if report.verdict == 'pass' else '❌'
        print(f"{marker} Bijectivité : {report.verdict}", file=sys.stderr)
        sys.stderr.write(report.to_text())

    if cfg.fmt == 'json-record':
        text = dumps(domain)
        if cfg.out:
            with open(cfg.out, 'w', encoding='utf-8') as fh:
                fh.write(text)
            print(f"✅ Enregistrement écrit dans {cfg.out}")
        else:
            print(text)
    elif cfg.fmt == 'svg':
        images = block_images(spec, blocks) if args.verify else None
        exporter_svg(creer_figure_domaine(domain, images), cfg.out)
        print(f"✅ Figure écrite dans {cfg.out}")
    else:
        rows = [{'part': r.part, 'x1': r.x1, 'x2': r.x2, 'y1': r.y1, 'y2': r.y2, 'tag': r.tag}
                for r in domain.rects]
        _emit_table(pd.DataFrame(rows), cfg, "Rectangles")
    if report is not None and report.verdict == 'fail':
        return 1
    return 0


def _spec_of(domain, tie_tol=LAB_TIE_TOL):
    return interval_spec(group_params(domain.n), domain.alpha, tie_tol)


def _domain_options(cfg, args):
    """Réglages de construction de Ω transmis à build_domain."""
    return {'sweep': args.sweep, 'tie_tol': cfg.tie_tol, 'max_letters': args.max_letters,
            'max_iter': cfg.max_iter, 'mass_tol': cfg.mass_tol, 'kmax': cfg.kmax}


def cmd_entropy(args):
    cfg = _config(args, alpha=args.alpha)
    params = group_params(cfg.n, cfg.precision)
    domain = build_domain(params, cfg.alpha, **_domain_options(cfg, args))
    result = rohlin_integral(domain, spec=interval_spec(params, domain.alpha, cfg.tie_tol))
    product = result.integral if result.infinite_mass else result.entropy * result.mass
    row = {
        'n': cfg.n, 'alpha': domain.alpha, 'kind': domain.kind, 'mass': result.mass,
        'rohlin_integral': result.integral, 'entropy': result.entropy,
        'product': product, 'residual_vs_vol': product - vol_n(cfg.n),
        'quad_error': result.quad_error,
    }
    _emit_table(pd.DataFrame([row]), cfg, "Entropie")
    return 0


def cmd_scan(args):
    cfg = _config(args)
    alphas = parse_alphas(args.alphas)
    print(f"🔄 Balayage de {len(alphas)} valeurs de α (n = {cfg.n}, {cfg.workers} processus)", file=sys.stderr)
    table = scan(cfg.n, alphas, precision=cfg.precision, workers=cfg.workers, with_expansive=args.expansive)
    failures = table['error'].fillna('').astype(bool).sum()
    if failures:
        print(f"⚠️  {failures} lignes en échec (colonne error)", file=sys.stderr)
    if cfg.fmt == 'svg':
        if not cfg.out:
            raise ConfigError("--format svg demande --out")
        fig = creer_figure_scan(table)
        if fig is not None:
            exporter_svg(fig, cfg.out)
            print(f"✅ Figure écrite dans {cfg.out}")
        return 0
    _emit_table(table, cfg, "Balayage")
    return 0


def cmd_conjecture(args):
    cfg = _config(args, alpha=args.alpha)
    report = verify_conjecture(cfg.n, cfg.alpha, precision=cfg.precision, **_domain_options(cfg, args))
    _banner(f"CONJECTURE vol_n, n = {cfg.n}, α = {report.alpha:.10g} ({report.kind})")
    print(f"∫τ dμ       = {report.integral:.12f}")
    print(f"vol_n       = {report.vol:.12f}")
    print(f"résidu      = {report.residual:.3e} ± {report.quad_error:.1e}")
    if report.approximate:
        print(f"⚠️  Domaine approché, résidu de masse {report.mass_residual:.3g}")
    ok = report.within(1e-6 if not report.approximate else 1e-3)
    print("✅ Identité vérifiée" if ok else "❌ Résidu hors tolérance")
    return 0 if ok else 1


def cmd_atlas(args):
    cfg = _config(args)
    params = group_params(cfg.n, cfg.precision)
    levels = [int(x) for x in args.levels.split(',') if x.strip()]
    words = list(candidate_words(args.max_letters, args.max_letter))
    df = atlas(params, levels, words, workers=cfg.workers, tol=cfg.sync_tol, tie_tol=cfg.tie_tol)
    print(f"📊 Fraction couverte de (0,1) : {covered_fraction(df):.6f}", file=sys.stderr)
    _emit_table(df, cfg, "Atlas")
    return 0


def cmd_expansive(args):
    cfg = _config(args, alpha=args.alpha)
    params = group_params(cfg.n, cfg.precision)
    domain = build_domain(params, cfg.alpha, **_domain_options(cfg, args))
    spec = interval_spec(params, domain.alpha, cfg.tie_tol)
    partition = expansivity_power(spec)
    _banner(f"PUISSANCE EXPANSIVE, n = {cfg.n}, α = {domain.alpha:.10g}")
    if partition.r is None:
        print("⚠️  Puissance non décidée (r_max dépassé)")
        return 1
    print(f"r = {partition.r}")
    for k in sorted(partition.pieces):
        spans = ', '.join(f"[{a:.6f}, {b:.6f})" for a, b in partition.E(k))
        print(f"E_{k} = {spans}")
    induced = induced_domain(domain, spec, partition)
    result = abramov_check(domain, induced, spec, partition)
    print(f"μ(ℱ)            = {result.mass_F:.10f}")
    print(f"∫_ℱ log|U′| dμ  = {result.induced_integral:.10f}")
    print(f"∫_Ω τ dμ        = {result.integral:.10f}")
    print(f"résidu Abramov  = {result.residual:.3e} ± {result.error:.1e}")
    if not result.reliable:
        print(f"⚠️  {result.failures} évaluations de log|U′| en échec : résidu non fiable")
        return 1
    return 0


# ========================================
# ANALYSEUR
# ========================================

def _common(sub):
    sub.add_argument('--n', type=int, default=3, help="indice du groupe (n >= 3)")
    sub.add_argument('--precision', type=int, default=None, help="bits de mantisse (> 53 : mpmath)")
    sub.add_argument('--seed', type=int, default=None, help="graine aléatoire")
    sub.add_argument('--samples', type=int, default=None, help="échantillons Monte-Carlo")
    sub.add_argument('--grid', type=int, default=None, help="taille de la grille de rastérisation")
    sub.add_argument('--kmax', type=int, default=None, help="plus grand |k| énuméré")
    sub.add_argument('--workers', type=int, default=None, help="processus pour les balayages")
    sub.add_argument('--max-letters', type=int, default=5, help="longueur maximale des mots candidats")
    sub.add_argument('--out', default=None, help="fichier de sortie")
    sub.add_argument('--format', default=None, choices=('csv', 'json-record', 'svg'), help="format de sortie")
    sub.add_argument('--verbose', action='store_true', help="journalisation détaillée")


def build_parser():
    parser = argparse.ArgumentParser(description="Laboratoire des fractions continues α-déformées (groupes G_n)")
    subs = parser.add_subparsers(dest='command', required=True)

    p = subs.add_parser('sync', help="extrémités ζ, η, δ et certificat d'un intervalle J_{k,v}")
    _common(p)
    p.add_argument('--k', type=int, required=True, help="niveau signé (k >= 1 petits α, k <= -1 grands α)")
    p.add_argument('--v', required=True, help='mot "c1 d1 … cs"')
    p.set_defaults(func=cmd_sync)

    for name, func, text in (
        ('domain', cmd_domain, "construit Ω_{n,α}"),
        ('entropy', cmd_entropy, "intégrale de Rohlin et entropie"),
        ('conjecture', cmd_conjecture, "∫τdμ comparé à vol_n"),
        ('expansive', cmd_expansive, "puissance expansive, ℱ et Abramov"),
    ):
        p = subs.add_parser(name, help=text)
        _common(p)
        p.add_argument('--alpha', required=True, help="α décimal ou zeta:k,v / eta:k,v / delta:k,v")
        p.add_argument('--sweep', action='store_true', help="balayage itératif (α non synchronisant)")
        if name == 'domain':
            p.add_argument('--verify', action='store_true', help="certificat de bijectivité")
        p.set_defaults(func=func)

    p = subs.add_parser('scan', help="masse, entropie et produit sur une grille de α")
    _common(p)
    p.add_argument('--alphas', required=True, help="début:fin:nombre")
    p.add_argument('--expansive', action='store_true', help="ajoute r, mass_F, induced_integral, abramov_residual")
    p.set_defaults(func=cmd_scan)

    p = subs.add_parser('atlas', help="résolution en lot des intervalles J_{k,v}")
    _common(p)
    p.add_argument('--levels', default='1,2,-1,-2', help="niveaux signés séparés par des virgules")
    p.add_argument('--max-letter', type=int, default=4, help="plus grande lettre des mots candidats")
    p.set_defaults(func=cmd_atlas)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose else getattr(logging, LAB_LOG_LEVEL.upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        precision = args.precision or LAB_PRECISION
        if precision > 53:
            with precision_context(precision):
                return args.func(args)
        return args.func(args)
    except LabError as exc:
        print(f"❌ {type(exc).__name__} : {exc}", file=sys.stderr)
        if isinstance(exc, UnresolvedParameterError):
            print("💡 Relancer avec --sweep pour une approximation par balayage", file=sys.stderr)
        return exc.exit_code


if __name__ == '__main__':
    sys.exit(main())
