import functools
import json
import logging
import sys
from pathlib import Path

import click
import yaml

from quatpolar.canonical import canonical_form
from quatpolar.config import Tolerance, load_config
from quatpolar.errors import InvalidInputError, QuatPolarError
from quatpolar.gen import gen_polar_instance, gen_selfadjoint_pair, parse_block_spec
from quatpolar.matrixfile import (
    MatrixDocument,
    dump_matrix_document,
    read_matrix_file,
    write_matrix_file,
)
from quatpolar.polar import polar_decompose, polar_exists, verify_polar
from quatpolar.quaternion import QMatrix, parse_quaternion
from quatpolar.sqroot import sqrt_build, sqrt_exists, sqrt_residual
from quatpolar.witt import (
    WittParams,
    build_witt_basis,
    extend_isometry,
    gram_profile,
    witt_from_params,
)

CONDITION_NAMES = {
    "cond_i": "condition (i): negative eigenvalue blocks do not pair",
    "cond_ii": "condition (ii): zero eigenvalue blocks do not pair",
    "cond_iii": "condition (iii): kernel not alignable",
}


class QuatPolarContext:
    @functools.cached_property
    def config(self) -> dict:
        return load_config()

    def tolerance(self, tol: float | None, rank_tol: float | None, cluster_radius: float | None) -> Tolerance:
        return Tolerance(**self.config).with_overrides(
            residual_tol=tol, rank_tol=rank_tol, cluster_radius=cluster_radius
        )


pass_quatpolar_context = click.make_pass_decorator(QuatPolarContext, ensure=True)


def tolerance_options(f):
    """--tol, --rank-tol, --cluster-radius and --format, shared by every command."""
    f = click.option("--cluster-radius", type=float, default=None, help="Eigenvalue grouping radius.")(f)
    f = click.option("--rank-tol", type=float, default=None, help="Relative rank threshold.")(f)
    f = click.option("--tol", type=float, default=None, help="Certification residual threshold.")(f)
    f = click.option(
        "--format",
        "fmt",
        type=click.Choice(["yaml", "json"], case_sensitive=False),
        default="yaml",
        help="Report format.",
    )(f)
    return f


def exits_on_error(f):
    """Prints library errors to stderr and exits with their code."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except QuatPolarError as e:
            click.echo(f"Error: {e}", err=True)
            if e.witness:
                click.echo(json.dumps(e.witness, sort_keys=True, default=str), err=True)
            click.get_current_context().exit(e.exit_code)

    return wrapper


def emit(document: dict, fmt: str) -> None:
    if fmt == "json":
        click.echo(json.dumps(document, sort_keys=True, indent=2))
    else:
        click.echo(yaml.safe_dump(document, sort_keys=True, default_flow_style=None), nl=False)


def read_param(value: str | None, name: str, doc: MatrixDocument) -> QMatrix | None:
    """A Witt parameter: inline quaternion (1x1), a matrix file path, or a section of the input."""
    if value is None:
        return doc.get(name)
    if Path(value).is_file():
        return read_matrix_file(value).require(name)
    try:
        return QMatrix.from_entries([[parse_quaternion(value)]])
    except InvalidInputError as e:
        raise InvalidInputError(f"--{name.lower()} is neither a file nor a quaternion: {value!r}") from e


@click.group()
@click.option("--verbose", is_flag=True, help="Log numerical decisions to stderr.")
@pass_quatpolar_context
@exits_on_error
def cli(ctx: QuatPolarContext, verbose: bool):
    """Canonical forms, square roots, Witt extensions and polar decompositions
    in indefinite quaternion inner product spaces."""
    if verbose:
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.DEBUG,
            format="%(levelname)s %(name)s: %(message)s",
        )


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False, readable=True))
@tolerance_options
@pass_quatpolar_context
@exits_on_error
def canonical(ctx: QuatPolarContext, path: str, fmt: str, tol, rank_tol, cluster_radius):
    """
    Reduces a selfadjoint pair (sections A, H) to canonical form.
    """
    tolerance = ctx.tolerance(tol, rank_tol, cluster_radius)
    doc = read_matrix_file(path)
    h = doc.form("H", tolerance)
    form = canonical_form(doc.require("A"), h, tolerance)
    emit({**form.to_dict(), "S": form.S.to_list()}, fmt)


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False, readable=True))
@click.option("--report-only", is_flag=True, help="Only decide existence.")
@tolerance_options
@pass_quatpolar_context
@exits_on_error
def sqrt(ctx: QuatPolarContext, path: str, report_only: bool, fmt: str, tol, rank_tol, cluster_radius):
    """
    Selfadjoint square root of B (sections B, H; optional kernel basis V).
    """
    tolerance = ctx.tolerance(tol, rank_tol, cluster_radius)
    doc = read_matrix_file(path)
    h = doc.form("H", tolerance)
    B = doc.require("B")
    if report_only:
        report = sqrt_exists(canonical_form(B, h, tolerance), tolerance)
        emit(report.to_dict(), fmt)
        if not report.exists:
            click.get_current_context().exit(1)
        return
    A = sqrt_build(B, h, tolerance, kernel_target=doc.get("V"))
    emit({"A": A.to_list(), "residual": sqrt_residual(A, B)}, fmt)


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False, readable=True))
@click.option("--p1", default=None, help="J2-unitary block: quaternion literal or matrix file.")
@click.option("--p2", default=None, help="Coupling block: quaternion literal or matrix file.")
@click.option("--p3", default=None, help="Skew-Hermitian block: quaternion literal or matrix file.")
@tolerance_options
@pass_quatpolar_context
@exits_on_error
def witt(ctx: QuatPolarContext, path: str, p1, p2, p3, fmt: str, tol, rank_tol, cluster_radius):
    """
    Extends the isometry V -> W (sections V, W, H and optionally H2) to the whole space.
    """
    tolerance = ctx.tolerance(tol, rank_tol, cluster_radius)
    doc = read_matrix_file(path)
    h1 = doc.form("H", tolerance)
    h2 = doc.form("H2", tolerance) if "H2" in doc else h1
    V, W = doc.require("V"), doc.require("W")
    given = {name: read_param(value, name, doc) for name, value in (("P1", p1), ("P2", p2), ("P3", p3))}
    profile, _ = gram_profile(V, h1, tolerance)
    if all(P is None for P in given.values()):
        U = extend_isometry(V, W, h1, h2, tolerance)
    else:
        basis = build_witt_basis(V, W, h1, h2, tolerance)
        trivial = WittParams.trivial(basis)
        params = WittParams(
            given["P1"] if given["P1"] is not None else trivial.P1,
            given["P2"] if given["P2"] is not None else trivial.P2,
            given["P3"] if given["P3"] is not None else trivial.P3,
        )
        U = witt_from_params(V, W, basis, params, h1, h2, tolerance)
    emit({"profile": profile.to_dict(), "U": U.to_list()}, fmt)


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False, readable=True))
@click.option("--report-only", is_flag=True, help="Only print the three existence conditions.")
@tolerance_options
@pass_quatpolar_context
@exits_on_error
def polar(ctx: QuatPolarContext, path: str, report_only: bool, fmt: str, tol, rank_tol, cluster_radius):
    """
    H-polar decomposition X = U A (sections X, H).
    """
    tolerance = ctx.tolerance(tol, rank_tol, cluster_radius)
    doc = read_matrix_file(path)
    h = doc.form("H", tolerance)
    X = doc.require("X")
    report = polar_exists(X, h, tolerance)
    if not report.exists:
        emit(report.to_dict(), fmt)
        failing = [CONDITION_NAMES[c] for c in ("cond_i", "cond_ii", "cond_iii") if not getattr(report, c)]
        reason = report.cond_iii.witness.get("reason")
        if not report.cond_iii and reason:
            failing[-1] += f" ({reason})"
        click.echo(f"Error: X admits no H-polar decomposition; {'; '.join(failing)}", err=True)
        click.get_current_context().exit(1)
    if report_only:
        emit(report.to_dict(), fmt)
        return
    decomposition = polar_decompose(X, h, tolerance, report=report)
    emit(
        {
            "U": decomposition.U.to_list(),
            "A": decomposition.A.to_list(),
            **decomposition.to_dict(),
        },
        fmt,
    )


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False, readable=True))
@tolerance_options
@pass_quatpolar_context
@exits_on_error
def verify(ctx: QuatPolarContext, path: str, fmt: str, tol, rank_tol, cluster_radius):
    """
    Re-checks a claimed decomposition (sections X, H, U, A).
    """
    tolerance = ctx.tolerance(tol, rank_tol, cluster_radius)
    doc = read_matrix_file(path)
    h = doc.form("H", tolerance)
    residuals = verify_polar(doc.require("X"), h, doc.require("U"), doc.require("A"), tolerance)
    emit(residuals.to_dict(), fmt)
    if not residuals.ok:
        click.echo("Error: decomposition failed verification", err=True)
        click.get_current_context().exit(3)


@cli.command()
@click.argument("block_spec", type=str)
@click.option("--seed", type=int, default=0, show_default=True, help="Random seed.")
@click.option(
    "--kind",
    type=click.Choice(["pair", "polar"], case_sensitive=False),
    default="pair",
    help="pair writes A, H; polar writes X, H, U, A.",
)
@click.option("--identity", is_flag=True, help="Use S = I (pair only).")
@click.option("--output", type=click.Path(path_type=Path), default=None, help="Output matrix file.")
@pass_quatpolar_context
@exits_on_error
def gen(ctx: QuatPolarContext, block_spec: str, seed: int, kind: str, identity: bool, output: Path | None):
    """
    Generates an instance from blocks such as "0:2:+,0:1:+".
    """
    tolerance = Tolerance(**ctx.config)
    blocks = parse_block_spec(block_spec)
    if kind == "pair":
        A, h, _ = gen_selfadjoint_pair(blocks, seed, tol=tolerance, identity=identity)
        sections = {"A": A, "H": h.H}
    else:
        X, h, ground = gen_polar_instance(blocks, seed, tolerance)
        sections = {"X": X, "H": h.H, "U": ground.U, "A": ground.A}
    doc = MatrixDocument(h.n, sections)
    if output is None:
        click.echo(dump_matrix_document(doc), nl=False)
    else:
        write_matrix_file(output, doc)
        click.echo(f"Wrote {kind} instance to {output}")


@cli.command()
@pass_quatpolar_context
@exits_on_error
def config(ctx: QuatPolarContext):
    """
    Displays the effective tolerance configuration.
    """
    click.echo(yaml.dump(ctx.config, indent=2))


if __name__ == "__main__":
    cli()
