"""
Sato-Tate Checker Application
Application factory and command-line entry point; each group of subcommands
lives in its own blueprint
"""
import logging
import os

from dotenv import load_dotenv
from flask import Flask
from flask.cli import FlaskGroup

load_dotenv()


def create_app(test_config=None):
    app = Flask(__name__)
    app.config['PRIME_CAP'] = int(os.getenv('STCHECK_PRIME_CAP', '1000000'))
    app.config['MAX_GROUP_ORDER'] = int(os.getenv('STCHECK_MAX_GROUP_ORDER', '64'))
    app.config['MC_STREAMS'] = int(os.getenv('STCHECK_MC_STREAMS', '8'))
    app.config['WORKERS'] = int(os.getenv('STCHECK_WORKERS', '1'))
    app.config['LOG_LEVEL'] = os.getenv('STCHECK_LOG_LEVEL', 'INFO').upper()
    if test_config:
        app.config.update(test_config)

    level = getattr(logging, app.config['LOG_LEVEL'], logging.INFO)
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    app.logger.setLevel(level)

    # Import and register blueprints
    from moments import moments_bp
    from curves import curves_bp
    from report import report_bp
    from cocycles import cocycles_bp

    app.register_blueprint(moments_bp)
    app.register_blueprint(curves_bp)
    app.register_blueprint(report_bp)
    app.register_blueprint(cocycles_bp)

    return app


cli = FlaskGroup(create_app=create_app, add_default_commands=False, load_dotenv=False,
                 help='Sato-Tate equidistribution checks.')


def main():
    cli.main(prog_name='stcheck')


if __name__ == '__main__':
    main()
