#!/usr/bin/env python3
"""Run the timer selection service."""

import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

from app import create_app
from app.config import configure_logging
from app.models import init_db

configure_logging()

# Create the Flask application
app = create_app()

if __name__ == '__main__':
    # Initialize the database
    init_db()

    # Get configuration from environment
    debug = os.getenv('FLASK_DEBUG', 'false').lower() == 'true'
    host = os.getenv('FLASK_HOST', '127.0.0.1')
    port = int(os.getenv('FLASK_PORT', 5000))

    app.logger.info("Timer selection service at http://%s:%s (debug=%s)", host, port, debug)

    app.run(host=host, port=port, debug=debug)
