import json
from datetime import datetime

from flask_sqlalchemy import SQLAlchemy

from harness import CSV_COLUMNS

db = SQLAlchemy()


class ExperimentRun(db.Model):
    id = db.Column(db.Integer, primary_key=True)
    family = db.Column(db.String(8), nullable=False)
    sigma = db.Column(db.Float, nullable=False)
    testfn = db.Column(db.String(16), nullable=False)
    quad_T = db.Column(db.Float, nullable=False)
    quad_tol = db.Column(db.Float, nullable=False)
    gap_slope = db.Column(db.Float)
    r_gap_slope = db.Column(db.Float)
    checks_json = db.Column(db.Text, default='{}')
    warnings_json = db.Column(db.Text, default='[]')
    created_at = db.Column(db.DateTime, default=datetime.utcnow)
    rows = db.relationship('GridResult', backref='run', lazy=True, cascade='all, delete-orphan',
                           order_by='GridResult.X')

    @classmethod
    def from_report(cls, report):
        cfg = report.config
        run = cls(
            family=cfg.family,
            sigma=cfg.sigma,
            testfn=cfg.testfn,
            quad_T=cfg.quad_T,
            quad_tol=cfg.quad_tol,
            gap_slope=report.gap_fit.slope if report.gap_fit else None,
            r_gap_slope=report.r_gap_fit.slope if report.r_gap_fit else None,
            checks_json=json.dumps(report.checks),
            warnings_json=json.dumps(report.warnings),
        )
        run.rows = [GridResult.from_values(row.as_row()) for row in report.rows]
        return run

    def to_dict(self, with_rows=False):
        payload = {
            'id': self.id,
            'family': self.family,
            'sigma': self.sigma,
            'testfn': self.testfn,
            'quad_T': self.quad_T,
            'quad_tol': self.quad_tol,
            'gap_slope': self.gap_slope,
            'r_gap_slope': self.r_gap_slope,
            'checks': json.loads(self.checks_json or '{}'),
            'warnings': json.loads(self.warnings_json or '[]'),
            'created_at': self.created_at.isoformat() if self.created_at else None,
            'grid': [row.X for row in self.rows],
        }
        if with_rows:
            payload['rows'] = [row.to_dict() for row in self.rows]
        return payload


class GridResult(db.Model):
    id = db.Column(db.Integer, primary_key=True)
    run_id = db.Column(db.Integer, db.ForeignKey('experiment_run.id'), nullable=False)
    X = db.Column(db.Integer, nullable=False)
    x_star = db.Column(db.Integer, nullable=False)
    rc_conductor = db.Column(db.Float)
    rc_zeta_ad_r = db.Column(db.Float)
    rc_r_term = db.Column(db.Float)
    rc_secondary = db.Column(db.Float)
    rc_total = db.Column(db.Float)
    rc_error_budget = db.Column(db.Float)
    nt_s_even = db.Column(db.Float)
    nt_s_even_1 = db.Column(db.Float)
    nt_s_even_2 = db.Column(db.Float)
    nt_s_odd = db.Column(db.Float)
    nt_total = db.Column(db.Float)
    usp = db.Column(db.Float)
    gap = db.Column(db.Float)
    r_gap = db.Column(db.Float)

    @classmethod
    def from_values(cls, values):
        return cls(**values)

    def to_dict(self):
        return {column: getattr(self, column) for column in CSV_COLUMNS}
