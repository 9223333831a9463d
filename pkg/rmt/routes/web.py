"""
Web routes for rmt
"""
from flask import Blueprint, current_app, jsonify

from rmt.handlers.actions import ACTIONS

web_bp = Blueprint("web", __name__)

@web_bp.route("/", methods=["GET"])
def index():
    return jsonify({
        "service": "rmt",
        "version": current_app.config.get("VERSION", "1.0.0"),
        "actions": [f"rmt.{name}" for name in ACTIONS],
    })

@web_bp.route("/health", methods=["GET"])
def health_check():
    """Health check endpoint"""
    health_data = {
        "status": "healthy",
        "version": current_app.config.get("VERSION", "1.0.0"),
        "eigensolver": current_app.config.get("RMT_EIGENSOLVER", "householder_ql"),
        "environment": current_app.config.get("ENV", "production"),
    }

    return jsonify(health_data)
