"""
Query API routes for rmt
"""
from typing import Any, Dict, Optional

from flask import Blueprint, current_app, jsonify, request
from pydantic import BaseModel, Field, ValidationError

from rmt.handlers.actions import handle_action
from rmt.utils.logger import get_component_logger

logger = get_component_logger("api")
api_bp = Blueprint("api", __name__, url_prefix="/api/rmt")


class ActionRequest(BaseModel):
    id: str = "unknown"
    action: str
    params: Dict[str, Any] = Field(default_factory=dict)


class ActionError(BaseModel):
    code: str
    message: str


class ActionResponse(BaseModel):
    id: str
    result: Optional[Dict[str, Any]] = None
    error: Optional[ActionError] = None


def _error(request_id: str, code: str, message: str, status: int):
    response = ActionResponse(id=request_id, error=ActionError(code=code, message=message))
    return jsonify(response.model_dump(exclude_none=True)), status


@api_bp.route("/ping", methods=["GET"])
def ping():
    """Health check for the query API"""
    return jsonify({
        "status": "ok",
        "message": "rmt API is running",
        "version": current_app.config.get("VERSION", "1.0.0"),
    })


@api_bp.route("/query", methods=["POST"])
def query():
    """Main query endpoint"""
    logger.info("Received rmt query")

    if not request.is_json:
        logger.error("Request body is not JSON")
        return jsonify({"error": "Request body must be JSON"}), 400

    req_data = request.get_json(silent=True) or {}
    try:
        action_request = ActionRequest.model_validate(req_data)
    except ValidationError as e:
        return _error(str(req_data.get("id", "unknown")), "INVALID_REQUEST", str(e), 400)

    if not action_request.action.startswith("rmt."):
        error_msg = f"Unsupported action: {action_request.action}"
        logger.error(error_msg)
        return _error(action_request.id, "UNSUPPORTED_ACTION", error_msg, 400)

    try:
        result = handle_action(action_request.action, action_request.params)
    except Exception as e:
        logger.exception(f"Error processing rmt request: {str(e)}")
        return _error(action_request.id, "INTERNAL_ERROR", str(e), 500)

    if result.get("success") is False:
        return _error(action_request.id, "ACTION_FAILED", result["error"], 400)
    response = ActionResponse(id=action_request.id, result=result)
    return jsonify(response.model_dump(exclude_none=True))
