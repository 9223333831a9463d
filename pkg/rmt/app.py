"""
rmt - Flask application
Serves the experiment, oracle and perturbation actions over HTTP
"""
import os

from flask import Flask
from flask_cors import CORS
from loguru import logger

from rmt.utils.logger import setup_logging
from rmt.utils.settings import load_settings

def create_app(test_config=None):
    """Create and configure the Flask application"""
    settings = load_settings()

    # Configure logging
    setup_logging(settings["LOG_LEVEL"])
    logger.info("Starting rmt service")

    # Create and configure the app
    app = Flask(__name__, instance_relative_config=True)

    # Set default configuration
    app.config.from_mapping(settings)

    # Load test config if provided
    if test_config is not None:
        app.config.from_mapping(test_config)
        logger.info("Test configuration loaded")

    # Enable CORS
    CORS(app)

    # Create instance directory if needed
    try:
        os.makedirs(app.instance_path)
    except OSError:
        pass

    # Register blueprints
    from rmt.routes.web import web_bp
    from rmt.routes.api import api_bp

    app.register_blueprint(web_bp)
    app.register_blueprint(api_bp)

    logger.info(f"Flask app initialized on port {app.config.get('PORT', 5000)}")
    return app
