import csv
import io
import logging
import os

from flask import Flask, jsonify, request, send_file
from werkzeug.datastructures import MultiDict
from wtforms import FloatField, Form, IntegerField, SelectField
from wtforms.validators import DataRequired, NumberRange, Optional

from arith import FamilySpec, FamilyKind, enumerate_family
from config import Config
from errors import ConfigError, DensityError
from harness import CSV_COLUMNS, ExperimentConfig, run_compare
from models import ExperimentRun, db
from ntside import explicit_formula_total
from ratios import ratios_prediction
from testfn import make_test_function, usp_density_functional

logger = logging.getLogger(__name__)


class ExperimentForm(Form):
    family = SelectField('Family', choices=[('even', 'even'), ('8d', '8d')], default='even')
    sigma = FloatField('Sigma', validators=[DataRequired(), NumberRange(min=1e-3, max=4)])
    testfn = SelectField('Test function', choices=[('fejer', 'fejer'), ('hat2', 'hat2')], default='fejer')
    quad_T = FloatField('Truncation', validators=[Optional(), NumberRange(min=10)])
    quad_panels = IntegerField('Panels', validators=[Optional(), NumberRange(min=1)])
    quad_tol = FloatField('Tolerance', validators=[Optional(), NumberRange(min=1e-14, max=1)])


class DensityForm(ExperimentForm):
    x = IntegerField('X', validators=[DataRequired(), NumberRange(min=5, max=10**7)])


class RunForm(ExperimentForm):
    prime_limit = IntegerField('Prime limit', validators=[Optional(), NumberRange(min=2)])


def _form_from_json(form_cls, payload):
    """WTForms form fed from a JSON body; values go through the same coercion as form posts"""
    data = MultiDict({k: str(v) for k, v in (payload or {}).items() if v is not None and not isinstance(v, list)})
    form = form_cls(formdata=data)
    if not form.validate():
        messages = '; '.join(f"{name}: {', '.join(errs)}" for name, errs in form.errors.items())
        raise ConfigError(f"invalid request: {messages}")
    return form


def _grid_from_json(payload):
    grid = (payload or {}).get('x')
    if not isinstance(grid, list) or not grid:
        raise ConfigError("'x' must be a non-empty list of grid points")
    try:
        return tuple(int(float(x)) for x in grid)
    except (TypeError, ValueError):
        raise ConfigError(f"'x' must hold numbers, got {grid!r}")


def _csv_bytes(run):
    output = io.StringIO()
    writer = csv.writer(output)
    writer.writerow(CSV_COLUMNS)
    for row in run.rows:
        values = row.to_dict()
        writer.writerow([values[c] if c in ('X', 'x_star') else f"{values[c]:.15g}" for c in CSV_COLUMNS])
    return io.BytesIO(output.getvalue().encode('utf-8-sig'))


def create_app(config_object=Config):
    app = Flask(__name__)
    app.config.from_object(config_object)
    os.makedirs(app.instance_path, exist_ok=True)
    db.init_app(app)

    with app.app_context():
        db.create_all()

    @app.errorhandler(DensityError)
    def handle_density_error(e):
        logger.warning("request failed: %s", e)
        return jsonify(e.to_dict()), e.http_status

    @app.route('/api/health')
    def health():
        return jsonify({'success': True, 'app': Config.APP_NAME, 'version': Config.APP_VERSION})

    @app.route('/api/density', methods=['POST'])
    def density():
        """Both sides of the one-level density at a single X"""
        form = _form_from_json(DensityForm, request.get_json(silent=True))
        f = make_test_function(form.testfn.data, form.sigma.data)
        kind = FamilyKind.parse(form.family.data)
        spec = Config.quadrature_spec(truncation_T=form.quad_T.data, panels=form.quad_panels.data,
                                      abs_tol=form.quad_tol.data)
        family = enumerate_family(FamilySpec(kind, form.x.data))
        rc = ratios_prediction(family, f, spec)
        nt = explicit_formula_total(family, f, spec=spec, conductor=rc.conductor_term)
        return jsonify({
            'success': True,
            'X': form.x.data,
            'x_star': family.x_star,
            'ratios': rc.as_dict(),
            'nt': nt.as_dict(),
            'usp': usp_density_functional(f),
            'gap': abs(nt.total - rc.total),
            'quad': {'T': spec.truncation_T, 'panels': spec.panels},
        })

    @app.route('/api/runs', methods=['POST'])
    def create_run():
        payload = request.get_json(silent=True) or {}
        form = _form_from_json(RunForm, payload)
        cfg = ExperimentConfig.from_sources(
            family=form.family.data,
            x_grid=_grid_from_json(payload),
            sigma=form.sigma.data,
            testfn=form.testfn.data,
            quad_T=form.quad_T.data,
            quad_panels=form.quad_panels.data,
            quad_tol=form.quad_tol.data,
            prime_limit=form.prime_limit.data,
        )
        report = run_compare(cfg)
        run = ExperimentRun.from_report(report)
        try:
            db.session.add(run)
            db.session.commit()
        except Exception:
            db.session.rollback()
            raise
        logger.info("stored run %d over %s", run.id, list(cfg.x_grid))
        return jsonify({'success': True, 'run': run.to_dict(with_rows=True)}), 201

    @app.route('/api/runs')
    def list_runs():
        runs = ExperimentRun.query.order_by(ExperimentRun.created_at.desc()).all()
        return jsonify({'success': True, 'runs': [run.to_dict() for run in runs]})

    @app.route('/api/runs/<int:run_id>')
    def get_run(run_id):
        run = db.session.get(ExperimentRun, run_id)
        if run is None:
            return jsonify({'success': False, 'message': 'Run not found'}), 404
        return jsonify({'success': True, 'run': run.to_dict(with_rows=True)})

    @app.route('/api/runs/<int:run_id>/export')
    def export_run(run_id):
        run = db.session.get(ExperimentRun, run_id)
        if run is None:
            return jsonify({'success': False, 'message': 'Run not found'}), 404
        filename = f"density_run_{run.id}_{run.family}_sigma{run.sigma:g}.csv"
        return send_file(_csv_bytes(run), as_attachment=True, download_name=filename, mimetype='text/csv')

    return app
