"""Timer Selection - optimal timer-based best-node selection for wireless networks."""

from flask import Flask
from flask_cors import CORS
import os
from dotenv import load_dotenv

load_dotenv()

__version__ = "0.1.0"


def create_app():
    """Create and configure the Flask application."""
    app = Flask(__name__)
    app.secret_key = os.getenv("FLASK_SECRET_KEY", "dev-secret-key")

    CORS(app)

    # Register blueprints
    from app.routes import main_bp
    app.register_blueprint(main_bp)

    # `flask select scheme1 ...` runs the experiment commands
    from app.cli import cli
    app.cli.add_command(cli, "select")

    return app
