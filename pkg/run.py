#!/usr/bin/env python3
"""
Quadratic Family One-Level Density - development server
"""

import logging
import os

from app import create_app
from config import Config


def main():
    """Main startup function"""
    logging.basicConfig(level=Config.LOG_LEVEL, format=Config.LOG_FORMAT)

    print("=" * 50)
    print(Config.APP_NAME)
    print("=" * 50)

    print("Initializing run store...")
    app = create_app()
    print(f"✓ Run store ready at {Config.SQLALCHEMY_DATABASE_URI}")

    port = int(os.environ.get('PORT', 5000))

    print(f"\nStarting server on http://localhost:{port}")
    print("Press Ctrl+C to stop the server")
    print("\n" + "=" * 50)

    print(
        f"Defaults: family={Config.FAMILY} sigma={Config.SIGMA} testfn={Config.TESTFN} "
        f"quad.T={Config.QUAD_T:g} quad.tol={Config.QUAD_TOL:g} workers={Config.WORKERS}"
    )

    app.run(
        host='0.0.0.0',
        port=port,
        debug=Config.DEBUG
    )


if __name__ == '__main__':
    main()
